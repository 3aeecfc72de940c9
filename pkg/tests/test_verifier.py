import json

import pytest

from goalkit.prop_logic import (
    And, Atom, FALSE, Imp, Not, Or, TRUE, tautology,
)
from goalkit.mental_state import (
    Bel, Enabled, Goal, MentalState, enumerate_states, eval_msf,
    validity_oracle,
)
from goalkit.capabilities import (
    CapabilitySpec, ConditionalAction, EffectClause, GoalAction, insert,
    remove,
)
from goalkit.agent_program import Agent, ground_shopping_fixture
from goalkit.executor import reachable
from goalkit.verifier import (
    Disj, EnsuresLeaf, HoareTriple, LassoTrace, MalformedProof, MissingAxiom,
    TInit, TState, Trans, UNDETERMINED, check_ensures, check_hoare_basic,
    check_hoare_conditional, check_leadsto, check_unless, derive_hoare,
    eval_temporal, fair_lasso_from, graph_ensures, graph_eventuality,
    graph_unless, prove_leadsto, render_report, subst_insert, t_always,
    t_ensures, t_eventually, trap_lasso, verify_agent, wlp,
)

P, Q = Atom("p"), Atom("q")
PQ = ("p", "q")


@pytest.fixture(scope="module")
def shopping():
    agent = ground_shopping_fixture()
    return agent, reachable(agent)


def small_universe():
    return list(enumerate_states(PQ, max_generators=2))


# -- semantic Hoare checking --------------------------------------------------


def test_hoare_basic_on_shopping_goto(shopping):
    agent, graph = shopping
    goto = agent.capabilities[0]
    triple = HoareTriple(Bel(Atom("hpage_user")), goto, Bel(Atom("Am_com")))
    assert check_hoare_basic(triple, graph.nodes, agent.table).holds


def test_hoare_basic_failure_carries_witness():
    triple = HoareTriple(TRUE, GoalAction("adopt", P), Goal(P))
    verdict = check_hoare_basic(triple, small_universe())
    assert not verdict.holds
    # the adopt is blocked exactly where p is already believed
    assert verdict.witness.believes(P)
    assert "not enabled" in verdict.detail
    assert "fails" in verdict.describe()


def test_hoare_basic_drop_is_always_enabled():
    triple = HoareTriple(TRUE, GoalAction("drop", TRUE), Not(Goal(P)))
    assert check_hoare_basic(triple, small_universe()).holds


def test_hoare_conditional_invariant_stability(shopping):
    agent, graph = shopping
    inv = next(p for p in agent.properties if p.kind == "invariant").left
    for b in agent.program:
        triple = HoareTriple(inv, b, inv)
        assert check_hoare_conditional(triple, graph, agent.table).holds


def test_hoare_conditional_idle_branch(shopping):
    agent, graph = shopping
    never = ConditionalAction(Bel(FALSE), agent.capabilities[0])
    # the condition is false everywhere, so the post must hold in place
    ok = HoareTriple(Bel(Atom("hpage_user")), never, Bel(Atom("hpage_user")))
    assert check_hoare_conditional(ok, graph, agent.table).holds
    bad = HoareTriple(Bel(Atom("hpage_user")), never, Bel(Atom("Am_com")))
    verdict = check_hoare_conditional(bad, graph, agent.table)
    assert not verdict.holds and "idle" in verdict.detail


# -- the wlp calculus ---------------------------------------------------------


def test_wlp_drop_substitution():
    assert wlp(GoalAction("drop", P), Not(Goal(P))) == Not(FALSE)
    # a goal leaf not entailing the dropped formula is untouched
    assert wlp(GoalAction("drop", And(P, Q)), Goal(P)) == Goal(P)


def test_wlp_adopt_shape():
    out = wlp(GoalAction("adopt", P), Goal(P))
    en = Enabled(GoalAction("adopt", P))
    assert out == Or(And(en, Not(Bel(P))), And(Not(en), Goal(P)))


def test_wlp_conditional_splits_on_the_condition():
    b = ConditionalAction(Bel(Q), GoalAction("drop", P))
    out = wlp(b, Goal(P))
    assert out == Or(And(Bel(Q), FALSE), And(Not(Bel(Q)), Goal(P)))


def test_subst_insert():
    assert subst_insert(Bel(Q), P) == Bel(Imp(P, Q))
    assert subst_insert(Goal(Q), P) == And(Goal(Q), Not(Bel(Imp(P, Q))))


def test_wlp_remove_is_identity_on_canonical_bases():
    sigma = And(Bel(P), Goal(Q))
    assert wlp(remove(P), sigma) == sigma


def test_wlp_missing_axiom():
    cap = CapabilitySpec("odd", (EffectClause(P, (Q,), ()),
                                 EffectClause(TRUE, (), (P,))))
    with pytest.raises(MissingAxiom):
        wlp(cap, Bel(P))
    # an explicit axiom table unblocks it
    assert wlp(cap, Bel(P), axioms={"odd": lambda s: TRUE}) == TRUE


# -- derived triples for the goal actions -------------------------------------


def test_derive_adopt_effect():
    # when the argument is satisfiable: {!B(phi)} adopt(phi) {G(phi)}
    triple = HoareTriple(Not(Bel(P)), GoalAction("adopt", P), Goal(P))
    assert derive_hoare(triple, PQ).holds


def test_derive_adopt_non_effects():
    # adopting never destroys a present goal
    keeps = HoareTriple(Goal(Q), GoalAction("adopt", And(P, Q)), Goal(Q))
    assert derive_hoare(keeps, PQ).holds
    # nor creates an absent one the argument does not entail
    absent = HoareTriple(Not(Goal(And(P, Q))), GoalAction("adopt", P),
                         Not(Goal(And(P, Q))))
    assert not tautology(Imp(P, And(P, Q)))
    assert derive_hoare(absent, PQ).holds


def test_derive_drop_effect():
    # when psi entails phi: {G(psi)} drop(phi) {!G(psi)}
    assert tautology(Imp(And(P, Q), P))
    triple = HoareTriple(Goal(And(P, Q)), GoalAction("drop", P),
                         Not(Goal(And(P, Q))))
    assert derive_hoare(triple, PQ).holds


def test_derive_drop_non_effects():
    absent = HoareTriple(Not(Goal(P)), GoalAction("drop", Q), Not(Goal(P)))
    assert derive_hoare(absent, PQ).holds
    survives = HoareTriple(And(Not(Goal(And(P, Q))), Goal(P)),
                           GoalAction("drop", Q), Goal(P))
    assert derive_hoare(survives, PQ).holds


def test_derive_insert_effect_and_agreement():
    effect = HoareTriple(And(Not(Bel(Not(P))), Bel(Imp(P, Q))),
                         insert(P), Bel(Q))
    too_weak = HoareTriple(Bel(Imp(P, Q)), insert(P), Bel(Q))
    for triple in (effect, too_weak):
        syntactic = derive_hoare(triple, PQ)
        semantic = check_hoare_basic(triple, small_universe())
        assert syntactic.holds == semantic.holds, str(triple)
    assert derive_hoare(effect, PQ).holds
    verdict = derive_hoare(too_weak, PQ)
    assert not verdict.holds and verdict.witness is not None


def test_derive_failure_witness_refutes_the_triple():
    triple = HoareTriple(Goal(P), GoalAction("adopt", Q), Goal(And(P, Q)))
    verdict = derive_hoare(triple, PQ)
    assert not verdict.holds
    s = verdict.witness
    assert eval_msf(s, triple.pre)
    # re-check the witness against the semantic route
    assert not check_hoare_basic(triple, [s]).holds


# -- unless / ensures ---------------------------------------------------------


def test_check_unless_declared_properties(shopping):
    agent, graph = shopping
    for prop in agent.properties:
        if prop.kind == "unless":
            assert check_unless(prop.left, prop.right, agent, graph).holds


def test_check_unless_failure_names_the_action(shopping):
    agent, graph = shopping
    verdict = check_unless(Bel(Atom("hpage_user")), FALSE, agent, graph)
    assert not verdict.holds
    assert "goto_Am_com" in verdict.detail
    assert verdict.witness is not None


def test_check_ensures_declared_properties(shopping):
    agent, graph = shopping
    ensured = [p for p in agent.properties if p.kind == "ensures"]
    assert ensured
    for prop in ensured:
        verdict = check_ensures(prop.left, prop.right, agent, graph)
        assert verdict.holds, str(prop)
        assert "witness" in verdict.scope


def test_check_ensures_negative(shopping):
    agent, graph = shopping
    verdict = check_ensures(Bel(Atom("hpage_user")), Bel(Atom("in_cart_T")),
                            agent, graph)
    assert not verdict.holds


# -- leads-to proofs ----------------------------------------------------------


def test_leadsto_single_leaf(shopping):
    agent, graph = shopping
    prop = next(p for p in agent.properties if p.kind == "ensures")
    leaf = EnsuresLeaf(prop.left, prop.right)
    assert check_leadsto(leaf, agent, graph).holds


def test_leadsto_malformed_nodes(shopping):
    agent, graph = shopping
    props = [p for p in agent.properties if p.kind == "ensures"]
    a = EnsuresLeaf(props[0].left, props[0].right)
    b = EnsuresLeaf(props[1].left, props[1].right)
    with pytest.raises(MalformedProof, match="middle"):
        check_leadsto(Trans(a, EnsuresLeaf(Bel(P), Bel(Q))), agent, graph)
    with pytest.raises(MalformedProof, match="empty"):
        check_leadsto(Disj(()), agent, graph)
    if a.right != b.right:
        with pytest.raises(MalformedProof, match="disagree"):
            check_leadsto(Disj((a, b)), agent, graph)


def test_prove_leadsto_main_property(shopping):
    agent, graph = shopping
    prop = next(p for p in agent.properties if p.kind == "leadsto")
    steps = [(p.left, p.right) for p in agent.properties
             if p.kind == "ensures"]
    proof = prove_leadsto(prop.left, prop.right, agent, steps, graph)
    assert proof is not None
    assert proof.left == prop.left or isinstance(proof, (Trans, Disj))
    assert check_leadsto(proof, agent, graph).holds


def test_prove_leadsto_gives_up_without_steps(shopping):
    agent, graph = shopping
    prop = next(p for p in agent.properties if p.kind == "leadsto")
    assert prove_leadsto(prop.left, prop.right, agent, [], graph) is None


# -- temporal evaluation over lassos ------------------------------------------


def bought_all():
    return And(Bel(Atom("bought_T")), Bel(Atom("bought_I")))


def test_temporal_init_leaf(shopping):
    agent, graph = shopping
    trace = fair_lasso_from(agent, graph, agent.initial_state)
    assert eval_temporal(trace, TInit(), 0) is True
    assert eval_temporal(trace, TInit(), 1) is False


def test_fair_lasso_satisfies_the_goal_properties(shopping):
    agent, graph = shopping
    trace = fair_lasso_from(agent, graph, agent.initial_state)
    inv = next(p for p in agent.properties if p.kind == "invariant").left
    assert eval_temporal(trace, t_always(TState(inv))) is True
    assert eval_temporal(trace, t_eventually(TState(bought_all()))) is True
    prop = next(p for p in agent.properties if p.kind == "ensures")
    assert eval_temporal(trace, t_ensures(prop.left, prop.right)) is True


def test_temporal_undetermined_on_short_prefix(shopping):
    agent, graph = shopping
    prefix = LassoTrace((agent.initial_state,), cycle_start=None,
                        tctx=agent.table)
    verdict = eval_temporal(prefix, t_eventually(TState(bought_all())))
    assert verdict == UNDETERMINED
    # decided sub-formulas stay boolean even on the prefix
    assert eval_temporal(prefix, TState(Bel(Atom("hpage_user")))) is True


def test_temporal_false_is_definite(shopping):
    agent, graph = shopping
    trace = fair_lasso_from(agent, graph, agent.initial_state)
    assert eval_temporal(trace, t_always(TState(Bel(Atom("hpage_user"))))) is False


# -- graph-level trace oracles ------------------------------------------------


def test_graph_unless_agrees_with_the_rule(shopping):
    agent, graph = shopping
    for prop in agent.properties:
        if prop.kind == "unless":
            assert graph_unless(prop.left, prop.right, agent, graph).holds
    broken = graph_unless(Bel(Atom("hpage_user")), FALSE, agent, graph)
    assert not broken.holds and "goto_Am_com" in broken.detail


def test_graph_eventuality_on_shopping(shopping):
    agent, graph = shopping
    verdict = graph_eventuality(Bel(Atom("hpage_user")), bought_all(),
                                agent, graph)
    assert verdict.holds
    for prop in agent.properties:
        if prop.kind == "ensures":
            assert graph_ensures(prop.left, prop.right, agent, graph).holds


def stuck_agent():
    """One self-looping no-op: every fair trace stays in the initial state."""
    noop = CapabilitySpec("noop", (EffectClause(TRUE, (), ()),))
    rule = ConditionalAction(TRUE, noop)
    initial = MentalState(frozenset({P}), frozenset())
    return Agent(PQ, (), (noop,), (rule,), initial, ())


def test_graph_eventuality_finds_a_fair_trap():
    agent = stuck_agent()
    graph = reachable(agent)
    verdict = graph_eventuality(Bel(P), Bel(Q), agent, graph)
    assert not verdict.holds
    assert "trap" in verdict.detail


def test_trap_lasso_refutes_the_eventuality():
    agent = stuck_agent()
    graph = reachable(agent)
    lasso = trap_lasso(agent, graph, agent.initial_state, Bel(Q))
    assert lasso is not None and lasso.cycle_start is not None
    assert eval_temporal(lasso, t_eventually(TState(Bel(Q)))) is False
    assert eval_temporal(lasso, t_always(TState(Not(Bel(Q))))) is True


def test_trap_lasso_absent_when_the_property_holds(shopping):
    agent, graph = shopping
    assert trap_lasso(agent, graph, agent.initial_state, bought_all()) is None


# -- whole-agent driver and reports -------------------------------------------


def test_verify_agent_shopping_all_hold(shopping):
    agent, _ = shopping
    obligations = verify_agent(agent)
    assert len(obligations) == len(agent.properties) + 1  # invariant splits
    assert all(ob.verdict.holds for ob in obligations)
    rules = {ob.rule for ob in obligations}
    assert "invariant-initialization" in rules
    assert "leadsto-composition" in rules


def test_verify_agent_parallel_matches_serial(shopping):
    agent, _ = shopping
    serial = [ob.record() for ob in verify_agent(agent)]
    parallel = [ob.record() for ob in verify_agent(agent, jobs=4)]
    assert serial == parallel


def test_render_report_text(shopping):
    agent, _ = shopping
    report = render_report(verify_agent(agent))
    assert report.startswith("verification report")
    assert "0 failing" in report


def test_render_report_records(shopping):
    agent, _ = shopping
    report = render_report(verify_agent(agent), fmt="records")
    lines = report.strip().split("\n")
    assert len(lines) == len(agent.properties) + 1
    for line in lines:
        record = json.loads(line)
        assert set(record) == {"obligation", "rule", "verdict",
                               "witness_state_digest"}
        assert record["verdict"] == "holds"
