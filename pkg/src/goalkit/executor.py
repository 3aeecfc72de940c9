"""Trace generation and reachable-state-graph construction.

A computation step attempts one conditional action: it executes when the
condition holds and the underlying action is enabled, and idles (state
unchanged) otherwise.  Idle steps are recorded, never elided.  Schedulers
decide only which action is attempted; both shipped kinds are weakly fair
in the finite-surrogate sense documented on :func:`fairness_check`.
"""

from __future__ import annotations

import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .agent_program import Agent
from .capabilities import ConditionalAction, apply_M, enabled_cond
from .mental_state import MentalState
from .prop_logic import render

DEFAULT_BUDGET = 10_000
BUDGET_ENV_VAR = "GOAL_BUDGET"


class BudgetExceeded(Exception):
    """Raised when reachable-graph construction outgrows its node budget."""


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(raw)
    except ValueError:
        raise BudgetExceeded(f"{BUDGET_ENV_VAR} must be an integer, got {raw!r}")


# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Step:
    """One attempted conditional action.  Idle steps leave the state fixed."""

    source: MentalState
    action: ConditionalAction
    target: MentalState
    executed: bool

    def __post_init__(self) -> None:
        if not self.executed:
            assert self.target == self.source


def step(state: MentalState, b: ConditionalAction) -> Step:
    """Attempt ``b`` at ``state``; executed when selected and enabled."""
    if enabled_cond(b, state):
        nxt = apply_M(b.action, state)
        assert nxt is not None
        return Step(state, b, nxt, True)
    return Step(state, b, state, False)


@dataclass(frozen=True)
class TracePrefix:
    """A finite prefix of a trace: n+1 states and n attempted actions."""

    agent: Agent
    states: tuple[MentalState, ...]
    picks: tuple[int, ...]          # indices into agent.program
    executed: tuple[bool, ...]
    scheduler_kind: str             # "rr" | "random" | "unfair" | "manual"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        assert len(self.states) == len(self.picks) + 1
        assert len(self.executed) == len(self.picks)

    def __len__(self) -> int:
        return len(self.picks)

    def final_state(self) -> MentalState:
        return self.states[-1]

    def dump_lines(self) -> list[str]:
        lines = []
        for i, (pick, done) in enumerate(zip(self.picks, self.executed)):
            state = self.states[i + 1]
            bels = ", ".join(sorted(render(f) for f in state.beliefs)) or "-"
            gens = ", ".join(sorted(render(g) for g in state.goals)) or "-"
            lines.append(
                f"step {i} | {self.agent.action_label(pick)} | "
                f"{'executed' if done else 'idle'} | "
                f"beliefs: {bels} | goals: {gens}")
        return lines


# ---------------------------------------------------------------------------
# Schedulers.


class RoundRobin:
    """Attempts actions in program order, cyclically."""

    kind = "rr"
    seed: Optional[int] = None

    def __init__(self, n_actions: int):
        self.n = n_actions
        self._next = 0

    def pick(self) -> int:
        choice = self._next
        self._next = (self._next + 1) % self.n
        return choice


class RandomFair:
    """Seeded random scheduler with constructive fairness.

    The first ``n`` picks are a random permutation of the program (so the
    per-action omission streaks stay pairwise distinct forever).  After
    that, any action omitted ``n`` times in a row is force-scheduled; the
    permutation guarantees at most one action is ever at the threshold, so
    no streak can exceed ``n``.
    """

    kind = "random"

    def __init__(self, n_actions: int, seed: int):
        self.n = n_actions
        self.seed = seed
        self._rng = random.Random(seed)
        self._opening = self._rng.sample(range(n_actions), n_actions)
        self._step = 0
        self._streaks = [0] * n_actions

    def pick(self) -> int:
        if self._step < self.n:
            choice = self._opening[self._step]
        else:
            worst = max(range(self.n), key=lambda i: self._streaks[i])
            if self._streaks[worst] >= self.n:
                choice = worst
            else:
                choice = self._rng.randrange(self.n)
        self._step += 1
        for i in range(self.n):
            self._streaks[i] = 0 if i == choice else self._streaks[i] + 1
        return choice


class UnfairRandom:
    """Plain seeded random choice with no fairness forcing (didactic only;
    excluded from verification semantics)."""

    kind = "unfair"

    def __init__(self, n_actions: int, seed: int):
        self.n = n_actions
        self.seed = seed
        self._rng = random.Random(seed)

    def pick(self) -> int:
        return self._rng.randrange(self.n)


def make_scheduler(kind: str, n_actions: int, seed: int = 0):
    if kind == "rr":
        return RoundRobin(n_actions)
    if kind == "random":
        return RandomFair(n_actions, seed)
    if kind == "unfair":
        return UnfairRandom(n_actions, seed)
    raise ValueError(f"unknown scheduler kind {kind!r}")


def run(agent: Agent, sched, steps: int) -> TracePrefix:
    """Drive ``agent`` for ``steps`` attempts under ``sched``."""
    states = [agent.initial_state]
    picks: list[int] = []
    executed: list[bool] = []
    for _ in range(steps):
        b = sched.pick()
        st = step(states[-1], agent.program[b])
        states.append(st.target)
        picks.append(b)
        executed.append(st.executed)
    return TracePrefix(agent, tuple(states), tuple(picks), tuple(executed),
                       sched.kind, getattr(sched, "seed", None))


def fairness_check(prefix: TracePrefix) -> bool:
    """Finite surrogate for "every action is scheduled infinitely often".

    Round-robin prefixes must cover the whole program in every window of
    |program| consecutive picks; the forcing random scheduler is checked
    against its omission-streak bound (no streak above |program|).  Unfair
    prefixes are held to the window criterion, which they generally fail.
    """
    n = len(prefix.agent.program)
    if len(prefix) < n:
        return True
    if prefix.scheduler_kind == "random":
        streaks = [0] * n
        for pick in prefix.picks:
            for i in range(n):
                streaks[i] = 0 if i == pick else streaks[i] + 1
                if streaks[i] > n:
                    return False
        return True
    for start in range(len(prefix) - n + 1):
        if set(prefix.picks[start:start + n]) != set(range(n)):
            return False
    return True


def max_omission_streak(picks: Iterable[int], n_actions: int) -> int:
    """The longest run of consecutive picks omitting some single action."""
    streaks = [0] * n_actions
    worst = 0
    for pick in picks:
        for i in range(n_actions):
            streaks[i] = 0 if i == pick else streaks[i] + 1
        worst = max(worst, max(streaks))
    return worst


# ---------------------------------------------------------------------------
# Reachable-state graph.


@dataclass(frozen=True, slots=True)
class Edge:
    source: MentalState
    action_index: int
    target: MentalState
    executed: bool


@dataclass
class StateGraph:
    agent: Agent
    nodes: list[MentalState] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    successors: dict[MentalState, tuple[Edge, ...]] = field(default_factory=dict)

    def edge_for(self, state: MentalState, action_index: int) -> Edge:
        return self.successors[state][action_index]

    def to_dot(self) -> str:
        index = {node: i for i, node in enumerate(self.nodes)}
        lines = ["digraph reachable {"]
        for node in self.nodes:
            lines.append(f'  n{index[node]} [label="{node.digest()}"];')
        for edge in self.edges:
            style = "" if edge.executed else ", style=dashed"
            lines.append(
                f'  n{index[edge.source]} -> n{index[edge.target]} '
                f'[label="{self.agent.action_label(edge.action_index)}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _expand(agent: Agent, state: MentalState) -> tuple[Edge, ...]:
    out = []
    for i, b in enumerate(agent.program):
        st = step(state, b)
        out.append(Edge(state, i, st.target, st.executed))
    return tuple(out)


def reachable(agent: Agent, budget: Optional[int] = None,
              jobs: int = 1) -> StateGraph:
    """BFS over the step relation from the initial state.

    Every action is expanded at every node; idle attempts are recorded as
    self-loop edges.  Raises :class:`BudgetExceeded` past the node budget.
    """
    if budget is None:
        budget = default_budget()
    graph = StateGraph(agent)
    seen: dict[MentalState, None] = {agent.initial_state: None}
    frontier = [agent.initial_state]
    graph.nodes.append(agent.initial_state)
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while frontier:
            if pool is not None:
                expansions = list(pool.map(lambda s: _expand(agent, s), frontier))
            else:
                expansions = [_expand(agent, s) for s in frontier]
            next_frontier: list[MentalState] = []
            for edges in expansions:
                for edge in edges:
                    graph.edges.append(edge)
                    if edge.target not in seen:
                        if len(seen) >= budget:
                            raise BudgetExceeded(
                                f"reachable-state budget of {budget} nodes exceeded")
                        seen[edge.target] = None
                        graph.nodes.append(edge.target)
                        next_frontier.append(edge.target)
                graph.successors[edges[0].source] = edges
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    return graph
