"""Command-line front end: run, verify, graph, and check-triple workflows.

Exit codes: 0 all checks hold / run completed; 1 a property failed;
2 usage or parse error; 3 bounds or budget exceeded.  Diagnostics go to
stderr, results to stdout, and identical invocations produce byte-identical
output.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .prop_logic import FormulaError, render
from .mental_state import BoundsExceeded, parse_msformula
from .capabilities import GoalAction
from .agent_program import (
    Agent, AgentParseError, SHOPPING_SOURCE, parse_agent,
)
from .executor import (
    BudgetExceeded, default_budget, fairness_check, make_scheduler, reachable,
    run,
)
from .verifier import (
    HoareTriple, MissingAxiom, check_hoare_basic, derive_hoare, render_report,
    verify_agent,
)

EXIT_OK = 0
EXIT_PROPERTY_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goalkit",
        description="Run and verify agents with beliefs and declarative goals.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_agent_source(p: argparse.ArgumentParser) -> None:
        p.add_argument("agent", nargs="?", help="path to an agent file")
        p.add_argument("--fixture", choices=["shopping"],
                       help="use a built-in agent instead of a file")

    p_run = sub.add_parser("run", help="execute an agent and dump the trace")
    add_agent_source(p_run)
    p_run.add_argument("--sched", choices=["rr", "random"], default="rr")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--steps", type=int, default=64)
    p_run.add_argument("--unfair", action="store_true",
                       help="didactic mode: drop the fairness forcing "
                            "(random scheduling only)")

    p_verify = sub.add_parser("verify",
                              help="check the agent's declared properties")
    add_agent_source(p_verify)
    p_verify.add_argument("--jobs", type=int, default=1)
    p_verify.add_argument("--budget", type=int, default=None,
                          help="reachable-state node budget")
    p_verify.add_argument("--format", choices=["text", "records"],
                          default="text")

    p_graph = sub.add_parser("graph",
                             help="export the reachable-state graph (DOT)")
    add_agent_source(p_graph)
    p_graph.add_argument("--out", default="-",
                         help="output path, '-' for stdout")
    p_graph.add_argument("--budget", type=int, default=None)
    p_graph.add_argument("--jobs", type=int, default=1)

    p_triple = sub.add_parser(
        "check-triple",
        help="check {pre} action {post} for a capability or goal action")
    add_agent_source(p_triple)
    p_triple.add_argument("pre", help="precondition (mental-state formula)")
    p_triple.add_argument("action",
                          help="capability name, adopt(...), or drop(...)")
    p_triple.add_argument("post", help="postcondition (mental-state formula)")
    p_triple.add_argument("--mode", choices=["semantic", "wlp"],
                          default="semantic")
    p_triple.add_argument("--max-generators", type=int, default=2)
    return parser


def _load_agent(args) -> Agent:
    if args.fixture == "shopping":
        return parse_agent(SHOPPING_SOURCE)
    if not args.agent:
        raise AgentParseError("an agent file (or --fixture) is required")
    with open(args.agent, encoding="utf-8") as handle:
        return parse_agent(handle.read())


def _cmd_run(args) -> int:
    agent = _load_agent(args)
    kind = "unfair" if args.unfair else args.sched
    sched = make_scheduler(kind, len(agent.program), args.seed)
    prefix = run(agent, sched, args.steps)
    for line in prefix.dump_lines():
        print(line)
    fair = fairness_check(prefix)
    print(f"scheduler: {kind} | steps: {args.steps} | "
          f"fairness surrogate: {'pass' if fair else 'fail'}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    agent = _load_agent(args)
    obligations = verify_agent(agent, budget=args.budget, jobs=max(1, args.jobs))
    sys.stdout.write(render_report(obligations, args.format))
    ok = all(ob.verdict.holds for ob in obligations)
    return EXIT_OK if ok else EXIT_PROPERTY_FAILED


def _cmd_graph(args) -> int:
    agent = _load_agent(args)
    graph = reachable(agent, budget=args.budget, jobs=max(1, args.jobs))
    dot = graph.to_dot()
    if args.out == "-":
        sys.stdout.write(dot)
    else:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(dot)
        print(f"wrote {len(graph.nodes)} nodes, {len(graph.edges)} edges "
              f"to {args.out}")
    return EXIT_OK


def _parse_action(agent: Agent, text: str):
    text = text.strip()
    for prefix in ("adopt", "drop"):
        if text.startswith(prefix + "(") and text.endswith(")"):
            from .prop_logic import parse_formula
            arg = parse_formula(text[len(prefix) + 1:-1], agent.vocab)
            return GoalAction(prefix, arg)
    if text in agent.table:
        return agent.table[text]
    raise AgentParseError(f"unknown action {text!r}")


def _cmd_check_triple(args) -> int:
    agent = _load_agent(args)
    pre = parse_msformula(args.pre, agent.vocab)
    post = parse_msformula(args.post, agent.vocab)
    action = _parse_action(agent, args.action)
    triple = HoareTriple(pre, action, post)
    if args.mode == "wlp":
        atoms = _triple_atoms(agent, triple)
        verdict = derive_hoare(triple, atoms, args.max_generators,
                               tctx=agent.table)
        route = "wlp + validity oracle"
    else:
        states = reachable(agent).nodes
        verdict = check_hoare_basic(triple, states, agent.table)
        route = "semantic over reachable states"
    print(f"{triple}")
    print(f"route: {route}")
    print(f"verdict: {verdict.describe()}")
    return EXIT_OK if verdict.holds else EXIT_PROPERTY_FAILED


def _triple_atoms(agent: Agent, triple: HoareTriple) -> tuple[str, ...]:
    from .agent_program import _formula_atoms
    names = set(_formula_atoms(triple.pre)) | set(_formula_atoms(triple.post))
    if isinstance(triple.statement, GoalAction):
        from .prop_logic import atoms_of
        names |= atoms_of(triple.statement.argument)
    else:
        for clause in triple.statement.clauses:
            from .prop_logic import atoms_of
            names |= atoms_of(clause.guard)
            for f in clause.add + clause.delete:
                names |= atoms_of(f)
    return tuple(sorted(names))


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "graph":
            return _cmd_graph(args)
        if args.command == "check-triple":
            return _cmd_check_triple(args)
        raise AssertionError(args.command)
    except (AgentParseError, FormulaError, MissingAxiom, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, BoundsExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
