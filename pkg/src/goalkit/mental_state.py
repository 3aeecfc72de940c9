"""Mental states and mental-state formulas.

A mental state pairs a consistent belief base with a goal base.  The goal
base is kept as a finite set of generator formulas; the agent has psi as a
goal exactly when psi is consistent, not believed, and entailed by some
single generator.  That realizes the closure condition on goal bases while
keeping states finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Iterable, Iterator, Optional, Protocol, Sequence

from .prop_logic import (
    And, Atom, Const, FALSE, Formula, FormulaError, Iff, Imp, Not, Or, TRUE,
    TokenStream, atoms_of, consistent, entails, formula_for_table, parse_prop,
    render, tautology, tokenize, truth_table, _parse_iff,
)


class MentalStateError(Exception):
    """Raised when a state (or construction thereof) breaks its invariants."""


class BoundsExceeded(Exception):
    """Raised when an enumeration request is outside the supported bounds."""


# ---------------------------------------------------------------------------
# Mental-state formula leaves.  Connectives are shared with prop_logic.


@dataclass(frozen=True, slots=True)
class Bel(Formula):
    arg: Formula


@dataclass(frozen=True, slots=True)
class Goal(Formula):
    arg: Formula


@dataclass(frozen=True, slots=True)
class Enabled(Formula):
    """Enabledness atom: the target is a capability name or a goal action."""

    target: object


class CapabilityResolver(Protocol):
    def is_enabled(self, name: str, state: "MentalState") -> bool: ...


# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class MentalState:
    """Pair of belief base and goal-generator base.

    Invariants (checked on construction): the belief base is consistent,
    every generator is consistent, and no generator is entailed by the
    beliefs.
    """

    beliefs: frozenset[Formula]
    goals: frozenset[Formula]

    def __post_init__(self) -> None:
        if not consistent(self.beliefs):
            raise MentalStateError("belief base is inconsistent")
        for gamma in self.goals:
            if not consistent((gamma,)):
                raise MentalStateError(
                    f"goal generator {render(gamma)} is inconsistent (clause (ii))")
            if entails(self.beliefs, gamma):
                raise MentalStateError(
                    f"goal generator {render(gamma)} is already believed (clause (i))")

    def believes(self, phi: Formula) -> bool:
        return entails(self.beliefs, phi)

    def digest(self) -> str:
        import hashlib
        text = " / ".join(
            (";".join(sorted(render(f) for f in self.beliefs)),
             ";".join(sorted(render(g) for g in self.goals))))
        return hashlib.sha1(text.encode()).hexdigest()[:12]

    def describe(self) -> str:
        bels = ", ".join(sorted(render(f) for f in self.beliefs)) or "-"
        gens = ", ".join(sorted(render(g) for g in self.goals)) or "-"
        return f"beliefs: {bels} | goals: {gens}"


def make_state(beliefs: Iterable[Formula], goals: Iterable[Formula]) -> MentalState:
    """Build a state, pruning generator candidates that the beliefs entail.

    Transformer code uses this: pruning achieved goals is part of every
    belief update, so the result always satisfies the state invariants.
    """
    bels = frozenset(beliefs)
    gens = frozenset(g for g in goals if not entails(bels, g))
    return MentalState(bels, gens)


def goal_holds(state: MentalState, psi: Formula) -> bool:
    """Whether ``psi`` is in the closure of the goal base of ``state``."""
    if not consistent((psi,)):
        return False
    if state.believes(psi):
        return False
    return any(entails((gamma,), psi) for gamma in state.goals)


def eval_msf(state: MentalState, phi: Formula,
             tctx: Optional[CapabilityResolver] = None) -> bool:
    """Truth of a mental-state formula at ``state``.

    ``tctx`` resolves enabledness of named capabilities; enabledness of
    adopt/drop is position-independent and needs no context.
    """
    match phi:
        case Bel(arg):
            return state.believes(arg)
        case Goal(arg):
            return goal_holds(state, arg)
        case Enabled(target):
            return _enabled_leaf(state, target, tctx)
        case Const(value):
            return value
        case Not(operand):
            return not eval_msf(state, operand, tctx)
        case And(a, b):
            return eval_msf(state, a, tctx) and eval_msf(state, b, tctx)
        case Or(a, b):
            return eval_msf(state, a, tctx) or eval_msf(state, b, tctx)
        case Imp(a, b):
            return (not eval_msf(state, a, tctx)) or eval_msf(state, b, tctx)
        case Iff(a, b):
            return eval_msf(state, a, tctx) == eval_msf(state, b, tctx)
        case Atom(name):
            raise MentalStateError(
                f"bare atom {name!r} in a mental-state formula; wrap it in B(...) or G(...)")
    raise MentalStateError(f"cannot evaluate {phi!r}")


def _enabled_leaf(state: MentalState, target: object,
                  tctx: Optional[CapabilityResolver]) -> bool:
    if isinstance(target, str):
        if tctx is None:
            raise MentalStateError(
                f"enabled({target}) needs a capability context to evaluate")
        return tctx.is_enabled(target, state)
    kind = getattr(target, "kind", None)
    arg = getattr(target, "argument", None)
    if kind == "drop":
        return True
    if kind == "adopt":
        return not tautology(Not(arg)) and not state.believes(arg)
    if tctx is None:
        raise MentalStateError(f"enabled({target!r}) needs a capability context")
    return tctx.is_enabled(getattr(target, "name"), state)


def msf_leaves(phi: Formula) -> Iterator[Formula]:
    """All Bel/Goal/Enabled leaves of ``phi`` (with repetition collapsed)."""
    seen: set[Formula] = set()

    def go(f: Formula) -> Iterator[Formula]:
        match f:
            case Bel() | Goal() | Enabled():
                if f not in seen:
                    seen.add(f)
                    yield f
            case Not(operand):
                yield from go(operand)
            case And(a, b) | Or(a, b) | Imp(a, b) | Iff(a, b):
                yield from go(a)
                yield from go(b)
            case _:
                return

    return go(phi)


def map_goal_leaves(phi: Formula, fn: Callable[[Formula], Formula]) -> Formula:
    """Rewrite every G-leaf of ``phi`` with ``fn`` (other nodes untouched)."""
    match phi:
        case Goal(arg):
            return fn(arg)
        case Not(operand):
            return Not(map_goal_leaves(operand, fn))
        case And(a, b):
            return And(map_goal_leaves(a, fn), map_goal_leaves(b, fn))
        case Or(a, b):
            return Or(map_goal_leaves(a, fn), map_goal_leaves(b, fn))
        case Imp(a, b):
            return Imp(map_goal_leaves(a, fn), map_goal_leaves(b, fn))
        case Iff(a, b):
            return Iff(map_goal_leaves(a, fn), map_goal_leaves(b, fn))
        case _:
            return phi


# ---------------------------------------------------------------------------
# Parsing mental-state formulas.


def _msf_leaf_hook(stream: TokenStream):
    tok = stream.peek()
    nxt = stream.tokens[stream.pos + 1] if stream.pos + 1 < len(stream.tokens) else None
    if nxt is None or nxt.text != "(":
        return None
    if tok.text in ("B", "G"):
        stream.next()
        stream.expect("(")
        inner = parse_prop(stream)
        stream.expect(")")
        return Bel(inner) if tok.text == "B" else Goal(inner)
    if tok.text == "enabled":
        stream.next()
        stream.expect("(")
        name = stream.next()
        if name.kind != "name":
            raise FormulaError(f"expected a capability name at position {name.pos}")
        stream.expect(")")
        return Enabled(name.text)
    return None


def parse_msf_stream(stream: TokenStream) -> Formula:
    return _parse_iff(stream, _msf_leaf_hook)


def _bare_atoms(phi: Formula) -> Iterator[str]:
    match phi:
        case Bel() | Goal() | Enabled():
            return
        case Atom(name):
            yield name
        case Not(operand):
            yield from _bare_atoms(operand)
        case And(a, b) | Or(a, b) | Imp(a, b) | Iff(a, b):
            yield from _bare_atoms(a)
            yield from _bare_atoms(b)


def parse_msformula(text: str, vocab: Optional[Iterable[str]] = None) -> Formula:
    """Parse a mental-state formula (B/G/enabled leaves plus connectives)."""
    stream = TokenStream(tokenize(text))
    phi = parse_msf_stream(stream)
    tail = stream.peek()
    if tail.kind != "eof":
        raise FormulaError(f"unexpected {tail.text!r} at position {tail.pos}")
    for name in _bare_atoms(phi):
        raise FormulaError(
            f"bare atom {name!r}; atoms must appear inside B(...) or G(...)")
    if vocab is not None:
        vocab = set(vocab)
        for leaf in msf_leaves(phi):
            if isinstance(leaf, (Bel, Goal)):
                unknown = atoms_of(leaf.arg) - vocab
                if unknown:
                    raise FormulaError(f"unknown atoms: {', '.join(sorted(unknown))}")
    return phi


# ---------------------------------------------------------------------------
# Bounded enumeration of mental states and the validity oracle.

MAX_ORACLE_ATOMS = 4
MAX_ORACLE_GENERATORS = 3


def canonical_formulas(vocab: tuple[str, ...],
                       include_false: bool = False) -> list[Formula]:
    """Canonical representatives of all semantic classes over ``vocab``.

    Ordered from weakest (true) to strongest, numerically within a size.
    """
    n_vals = 1 << len(vocab)
    tables = sorted(range(0 if include_false else 1, 1 << n_vals),
                    key=lambda t: (-bin(t).count("1"), t))
    return [formula_for_table(t, vocab) for t in tables]


def enumerate_states(vocab: Sequence[str],
                     max_generators: int = 2) -> Iterator[MentalState]:
    """All mental states over ``vocab``, one per semantic class.

    Belief bases range over nonempty valuation sets (weakest theory first);
    generators over canonical consistent formulas, up to ``max_generators``
    per state, skipping candidates the beliefs entail.  The order is fixed,
    so "first countermodel" is well defined.
    """
    voc = tuple(sorted(vocab))
    if len(voc) > MAX_ORACLE_ATOMS:
        raise BoundsExceeded(f"at most {MAX_ORACLE_ATOMS} atoms supported")
    if max_generators > MAX_ORACLE_GENERATORS:
        raise BoundsExceeded(f"at most {MAX_ORACLE_GENERATORS} generators supported")
    yield from _state_space(voc, max_generators)


@lru_cache(maxsize=16)
def _state_space(voc: tuple[str, ...],
                 max_generators: int) -> tuple[MentalState, ...]:
    n_vals = 1 << len(voc)
    full = (1 << n_vals) - 1
    candidates = canonical_formulas(voc)
    theory_tables = sorted(range(1, 1 << n_vals),
                           key=lambda t: (-bin(t).count("1"), t))
    out = []
    for sigma_table in theory_tables:
        beliefs: frozenset[Formula]
        if sigma_table == full:
            beliefs = frozenset()
        else:
            beliefs = frozenset((formula_for_table(sigma_table, voc),))
        usable = [g for g in candidates
                  if sigma_table & ~truth_table(g, voc) != 0]
        for size in range(max_generators + 1):
            for gens in combinations(usable, size):
                out.append(MentalState(beliefs, frozenset(gens)))
    return tuple(out)


@dataclass(frozen=True, slots=True)
class OracleVerdict:
    valid: bool
    countermodel: Optional[MentalState]
    atoms: tuple[str, ...]
    max_generators: int

    def __bool__(self) -> bool:
        return self.valid

    def describe(self) -> str:
        if self.valid:
            return (f"valid-within-bounds (atoms={','.join(self.atoms)}, "
                    f"generators<={self.max_generators})")
        assert self.countermodel is not None
        return f"countermodel: {self.countermodel.describe()}"


def validity_oracle(phi: Formula, atoms: Sequence[str],
                    max_generators: int = 2,
                    tctx: Optional[CapabilityResolver] = None) -> OracleVerdict:
    """Decide ``phi`` over all bounded mental states.

    Refutations are exact (the countermodel is the least in enumeration
    order); the positive verdict claims validity only within the bounds.
    """
    voc = tuple(sorted(atoms))
    for state in enumerate_states(voc, max_generators):
        if not eval_msf(state, phi, tctx):
            return OracleVerdict(False, state, voc, max_generators)
    return OracleVerdict(True, None, voc, max_generators)
