"""Propositional formulas, their parser, and classical consequence.

Consequence is decided by model enumeration: vocabularies stay small
(a dozen atoms at most), so a formula's truth table fits comfortably in
a Python integer, with bit ``i`` giving the formula's value under the
``i``-th valuation of the vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence


class FormulaError(Exception):
    """Raised for malformed formula text or out-of-vocabulary atoms."""


class Formula:
    """Base class of all formula AST nodes (propositional and modal)."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, slots=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff(Formula):
    left: Formula
    right: Formula


def conj(parts: Sequence[Formula]) -> Formula:
    """Right-nested conjunction of ``parts`` (``true`` when empty)."""
    if not parts:
        return TRUE
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = And(part, out)
    return out


def disj(parts: Sequence[Formula]) -> Formula:
    if not parts:
        return FALSE
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = Or(part, out)
    return out


_atom_sets: dict[Formula, frozenset[str]] = {}


def atoms_of(phi: Formula) -> frozenset[str]:
    """Atom names occurring in a purely propositional formula."""
    cached = _atom_sets.get(phi)
    if cached is not None:
        return cached
    match phi:
        case Atom(name):
            out = frozenset((name,))
        case Const():
            out = frozenset()
        case Not(operand):
            out = atoms_of(operand)
        case And(a, b) | Or(a, b) | Imp(a, b) | Iff(a, b):
            out = atoms_of(a) | atoms_of(b)
        case _:
            raise FormulaError(f"not a propositional formula: {phi!r}")
    _atom_sets[phi] = out
    return out


# ---------------------------------------------------------------------------
# Truth tables over a fixed vocabulary.
#
# For a vocabulary (a0 < a1 < ... < a_{n-1}) valuation i makes atom a_k true
# iff bit k of i is set.  A formula's table is the integer whose bit i is the
# formula's value under valuation i.

_atom_patterns: dict[tuple[tuple[str, ...], str], int] = {}
_tables: dict[tuple[Formula, tuple[str, ...]], int] = {}


def _atom_pattern(vocab: tuple[str, ...], name: str) -> int:
    key = (vocab, name)
    cached = _atom_patterns.get(key)
    if cached is None:
        k = vocab.index(name)
        cached = 0
        for i in range(1 << len(vocab)):
            if (i >> k) & 1:
                cached |= 1 << i
        _atom_patterns[key] = cached
    return cached


def truth_table(phi: Formula, vocab: tuple[str, ...]) -> int:
    """The truth table of ``phi`` as a bit mask over valuations of ``vocab``."""
    key = (phi, vocab)
    cached = _tables.get(key)
    if cached is not None:
        return cached
    full = (1 << (1 << len(vocab))) - 1
    match phi:
        case Atom(name):
            if name not in vocab:
                raise FormulaError(f"atom {name!r} not in vocabulary")
            table = _atom_pattern(vocab, name)
        case Const(value):
            table = full if value else 0
        case Not(operand):
            table = full & ~truth_table(operand, vocab)
        case And(a, b):
            table = truth_table(a, vocab) & truth_table(b, vocab)
        case Or(a, b):
            table = truth_table(a, vocab) | truth_table(b, vocab)
        case Imp(a, b):
            table = (full & ~truth_table(a, vocab)) | truth_table(b, vocab)
        case Iff(a, b):
            table = full & ~(truth_table(a, vocab) ^ truth_table(b, vocab))
        case _:
            raise FormulaError(f"not a propositional formula: {phi!r}")
    _tables[key] = table
    return table


def shared_vocab(formulas: Iterable[Formula]) -> tuple[str, ...]:
    names: set[str] = set()
    for phi in formulas:
        names |= atoms_of(phi)
    return tuple(sorted(names))


def _conj_table(premises: Iterable[Formula], vocab: tuple[str, ...]) -> int:
    table = (1 << (1 << len(vocab))) - 1
    for phi in premises:
        table &= truth_table(phi, vocab)
    return table


def entails(premises: Iterable[Formula], phi: Formula,
            vocab: Optional[Sequence[str]] = None) -> bool:
    """Classical consequence: every model of all premises satisfies ``phi``."""
    premises = tuple(premises)
    voc = tuple(vocab) if vocab is not None else shared_vocab(premises + (phi,))
    return _conj_table(premises, voc) & ~truth_table(phi, voc) == 0


def consistent(formulas: Iterable[Formula],
               vocab: Optional[Sequence[str]] = None) -> bool:
    """True iff some valuation satisfies every member."""
    formulas = tuple(formulas)
    voc = tuple(vocab) if vocab is not None else shared_vocab(formulas)
    return _conj_table(formulas, voc) != 0


def tautology(phi: Formula) -> bool:
    return entails((), phi)


def equivalent(phi: Formula, psi: Formula) -> bool:
    return tautology(Iff(phi, psi))


def valuations(vocab: Sequence[str]) -> Iterator[frozenset[str]]:
    """All valuations of ``vocab``, as sets of true atoms, in index order."""
    voc = tuple(vocab)
    for i in range(1 << len(voc)):
        yield frozenset(a for k, a in enumerate(voc) if (i >> k) & 1)


def satisfies(valuation: frozenset[str], phi: Formula) -> bool:
    match phi:
        case Atom(name):
            return name in valuation
        case Const(value):
            return value
        case Not(operand):
            return not satisfies(valuation, operand)
        case And(a, b):
            return satisfies(valuation, a) and satisfies(valuation, b)
        case Or(a, b):
            return satisfies(valuation, a) or satisfies(valuation, b)
        case Imp(a, b):
            return (not satisfies(valuation, a)) or satisfies(valuation, b)
        case Iff(a, b):
            return satisfies(valuation, a) == satisfies(valuation, b)
    raise FormulaError(f"not a propositional formula: {phi!r}")


def minterm(index: int, vocab: tuple[str, ...]) -> Formula:
    """The conjunction of literals picking out valuation ``index``."""
    lits: list[Formula] = []
    for k, name in enumerate(vocab):
        atom: Formula = Atom(name)
        lits.append(atom if (index >> k) & 1 else Not(atom))
    return conj(lits)


def formula_for_table(table: int, vocab: tuple[str, ...]) -> Formula:
    """A canonical formula (minterm disjunction) with the given truth table."""
    if table == 0:
        return FALSE
    if table == (1 << (1 << len(vocab))) - 1:
        return TRUE
    terms = [minterm(i, vocab) for i in range(1 << len(vocab)) if (table >> i) & 1]
    return disj(terms)


# ---------------------------------------------------------------------------
# Rendering.  Parenthesization follows the grammar's precedence, so parsing
# the rendered text reproduces the AST.

_PREC = {Iff: 1, Imp: 2, Or: 3, And: 4, Not: 5}


def render(phi: Formula) -> str:
    def go(f: Formula, parent: int) -> str:
        match f:
            case Atom(name):
                return name
            case Const(value):
                return "true" if value else "false"
            case Not(operand):
                return "!" + go(operand, _PREC[Not])
            case And(a, b):
                # & and | associate to the left; -> and <-> to the right
                text = f"{go(a, _PREC[And])} & {go(b, _PREC[And] + 1)}"
                prec = _PREC[And]
            case Or(a, b):
                text = f"{go(a, _PREC[Or])} | {go(b, _PREC[Or] + 1)}"
                prec = _PREC[Or]
            case Imp(a, b):
                text = f"{go(a, _PREC[Imp] + 1)} -> {go(b, _PREC[Imp])}"
                prec = _PREC[Imp]
            case Iff(a, b):
                text = f"{go(a, _PREC[Iff] + 1)} <-> {go(b, _PREC[Iff])}"
                prec = _PREC[Iff]
            case _:
                return _render_extension(f, go)
        return f"({text})" if prec < parent else text

    return go(phi, 0)


def _render_extension(f: Formula, go) -> str:
    # Mental-state leaves live in another module; render them here by duck
    # typing so one renderer serves both languages.
    kind = type(f).__name__
    if kind == "Bel":
        return f"B({render(f.arg)})"
    if kind == "Goal":
        return f"G({render(f.arg)})"
    if kind == "Enabled":
        target = f.target
        if isinstance(target, str):
            return f"enabled({target})"
        return f"enabled({target})"
    raise FormulaError(f"cannot render {f!r}")


# ---------------------------------------------------------------------------
# Lexing and parsing.

_PUNCT = ("<->", "->", "(", ")", "{", "}", ";", ",", "!", "&", "|")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "name", "punct", "eof"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("name", text[i:j], i))
            i = j
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(Token("punct", punct, i))
                i += len(punct)
                break
        else:
            raise FormulaError(f"unexpected character {c!r} at position {i}")
    tokens.append(Token("eof", "", n))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token], pos: int = 0):
        self.tokens = tokens
        self.pos = pos

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise FormulaError(
                f"expected {text!r} at position {tok.pos}, found {tok.text or 'end of input'!r}")
        return tok


def parse_prop(stream: TokenStream) -> Formula:
    """Parse a propositional formula from ``stream`` (lowest precedence: <->)."""
    return _parse_iff(stream, None)


def _parse_iff(stream: TokenStream, leaf_hook) -> Formula:
    left = _parse_imp(stream, leaf_hook)
    if stream.peek().text == "<->":
        stream.next()
        return Iff(left, _parse_iff(stream, leaf_hook))
    return left


def _parse_imp(stream: TokenStream, leaf_hook) -> Formula:
    left = _parse_or(stream, leaf_hook)
    if stream.peek().text == "->":
        stream.next()
        return Imp(left, _parse_imp(stream, leaf_hook))
    return left


def _parse_or(stream: TokenStream, leaf_hook) -> Formula:
    left = _parse_and(stream, leaf_hook)
    while stream.peek().text == "|":
        stream.next()
        left = Or(left, _parse_and(stream, leaf_hook))
    return left


def _parse_and(stream: TokenStream, leaf_hook) -> Formula:
    left = _parse_unary(stream, leaf_hook)
    while stream.peek().text == "&":
        stream.next()
        left = And(left, _parse_unary(stream, leaf_hook))
    return left


def _parse_unary(stream: TokenStream, leaf_hook) -> Formula:
    tok = stream.peek()
    if tok.text == "!":
        stream.next()
        return Not(_parse_unary(stream, leaf_hook))
    if tok.text == "(":
        stream.next()
        inner = _parse_iff(stream, leaf_hook)
        stream.expect(")")
        return inner
    if tok.kind == "name":
        if leaf_hook is not None:
            special = leaf_hook(stream)
            if special is not None:
                return special
        stream.next()
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        return Atom(tok.text)
    raise FormulaError(f"expected a formula at position {tok.pos}, found {tok.text!r}")


def parse_formula(text: str, vocab: Optional[Iterable[str]] = None) -> Formula:
    """Parse ``text`` as a propositional formula.

    When ``vocab`` is given, atoms outside it are rejected.
    """
    stream = TokenStream(tokenize(text))
    phi = parse_prop(stream)
    tail = stream.peek()
    if tail.kind != "eof":
        raise FormulaError(f"unexpected {tail.text!r} at position {tail.pos}")
    if vocab is not None:
        unknown = atoms_of(phi) - set(vocab)
        if unknown:
            raise FormulaError(f"unknown atoms: {', '.join(sorted(unknown))}")
    return phi
