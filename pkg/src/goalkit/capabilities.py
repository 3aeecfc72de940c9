"""Belief-update capabilities, goal actions, and the mental-state transformer.

A capability is realized as an ordered list of guarded add/delete clauses:
the first clause whose guard the beliefs entail fires, deletion removes the
listed formulas by syntactic identity, and the update is undefined when no
clause fires or the updated base is inconsistent.  Undefined updates are a
normal value (``None``); the executor turns them into idle steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .prop_logic import (
    Formula, Not, atoms_of, consistent, entails, formula_for_table, render,
    tautology, truth_table,
)
from .mental_state import MentalState, eval_msf, make_state


@dataclass(frozen=True, slots=True)
class EffectClause:
    guard: Formula
    add: tuple[Formula, ...]
    delete: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class CapabilitySpec:
    name: str
    clauses: tuple[EffectClause, ...]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class GoalAction:
    kind: str  # "adopt" | "drop"
    argument: Formula

    def __str__(self) -> str:
        return f"{self.kind}({render(self.argument)})"


Action = Union[CapabilitySpec, GoalAction]


@dataclass(frozen=True, slots=True)
class ConditionalAction:
    """A guarded action: the condition is a mental-state formula over B/G."""

    condition: Formula
    action: Action

    def __str__(self) -> str:
        return f"{render(self.condition)} -> do({self.action})"


from .prop_logic import TRUE  # noqa: E402  (import placed near first use)


def insert(phi: Formula) -> CapabilitySpec:
    """The built-in capability that adds ``phi`` to the beliefs."""
    return CapabilitySpec(f"ins({render(phi)})",
                          (EffectClause(TRUE, (phi,), ()),))


def remove(phi: Formula) -> CapabilitySpec:
    """The built-in capability that removes the formula ``phi`` (by identity)."""
    return CapabilitySpec(f"del({render(phi)})",
                          (EffectClause(TRUE, (), (phi,)),))


def apply_T(cap: CapabilitySpec,
            beliefs: frozenset[Formula]) -> Optional[frozenset[Formula]]:
    """The partial belief-update function.

    Returns the updated base, or ``None`` when no clause applies or the
    update would be inconsistent.
    """
    for clause in cap.clauses:
        if entails(beliefs, clause.guard):
            updated = (beliefs - frozenset(clause.delete)) | frozenset(clause.add)
            if not consistent(updated):
                return None
            return updated
    return None


def enabled_cap(action: Action, state: MentalState) -> bool:
    """Enabledness of a basic action at ``state``.

    Belief capabilities are enabled exactly when their update is defined;
    drop is always enabled; adopt requires a satisfiable, not-yet-believed
    argument.
    """
    if isinstance(action, GoalAction):
        if action.kind == "drop":
            return True
        return (not tautology(Not(action.argument))
                and not state.believes(action.argument))
    return apply_T(action, state.beliefs) is not None


def apply_M(action: Action, state: MentalState) -> Optional[MentalState]:
    """The mental-state transformer; ``None`` when the action is not enabled.

    Belief updates prune every goal generator the new beliefs entail (the
    blind-commitment strategy: a goal is dropped exactly when believed
    achieved).  drop removes the generators entailing its argument; adopt
    adds its argument as a new generator.
    """
    if isinstance(action, GoalAction):
        if action.kind == "drop":
            kept: list[Formula] = []
            for g in state.goals:
                if entails((g,), action.argument):
                    kept.extend(_weakenings(g, action.argument))
                else:
                    kept.append(g)
            return make_state(state.beliefs, kept)
        if not enabled_cap(action, state):
            return None
        return MentalState(state.beliefs, state.goals | {action.argument})
    updated = apply_T(action, state.beliefs)
    if updated is None:
        return None
    return make_state(updated, state.goals)


def _weakenings(gamma: Formula, phi: Formula) -> list[Formula]:
    """Generators covering the consequences of ``gamma`` that survive drop(phi).

    The goal base is closed under consequence, so dropping phi removes only
    the consequences that entail phi; a consequence chi of gamma survives
    exactly when it has a model outside phi.  The strongest survivors are
    gamma-or-one-extra-model, one per non-phi valuation.
    """
    vocab = tuple(sorted(atoms_of(gamma) | atoms_of(phi)))
    if not vocab:
        return []
    g_table = truth_table(gamma, vocab)
    p_table = truth_table(phi, vocab)
    return [formula_for_table(g_table | (1 << v), vocab)
            for v in range(1 << len(vocab)) if not (p_table >> v) & 1]


def enabled_cond(b: ConditionalAction, state: MentalState) -> bool:
    """A conditional action executes iff its condition holds and the
    underlying action is enabled."""
    return eval_msf(state, b.condition) and enabled_cap(b.action, state)


class CapabilityTable:
    """Name-indexed capability lookup; doubles as the enabledness resolver
    for ``enabled(...)`` leaves in mental-state formulas."""

    def __init__(self, capabilities: dict[str, CapabilitySpec]):
        self.capabilities = dict(capabilities)

    def __getitem__(self, name: str) -> CapabilitySpec:
        return self.capabilities[name]

    def __contains__(self, name: str) -> bool:
        return name in self.capabilities

    def is_enabled(self, name: str, state: MentalState) -> bool:
        cap = self.capabilities.get(name)
        if cap is None:
            raise KeyError(f"unknown capability {name!r}")
        return enabled_cap(cap, state)
