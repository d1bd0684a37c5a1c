"""LTL formulas, a recursive-descent parser, and exact evaluation on lasso words.

Concrete syntax (whitespace-insensitive, operators separated from atoms)::

    f ::= f -> f | f | f | f & f | f U f | f R f
        | ! f | X f | F f | G f | ( f ) | true | false | atom

Binding strength, tightest first: unary operators, ``U``/``R`` (right
associative), ``&``, ``|``, ``->`` (right associative).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union


class LtlSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


@dataclass(frozen=True)
class Eventually:
    arg: "Formula"


@dataclass(frozen=True)
class Globally:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Release:
    left: "Formula"
    right: "Formula"


Formula = Union[Const, Atom, Not, Next, Eventually, Globally, And, Or, Implies, Until, Release]

TRUE = Const(True)
FALSE = Const(False)

_UNARY = {"!": Not, "X": Next, "F": Eventually, "G": Globally}
_SYMBOL = {Not: "!", Next: "X", Eventually: "F", Globally: "G",
           And: "&", Or: "|", Implies: "->", Until: "U", Release: "R"}

_TOKEN = re.compile(r"\s*(?:(->)|([!&|()])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = len(text) - len(text[pos:].lstrip())
            raise LtlSyntaxError(f"unexpected character {text[start]!r}", start)
        tok = m.group(1) or m.group(2) or m.group(3)
        tokens.append((tok, m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def take(self) -> tuple[str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got, pos = self.take()
        if got != tok:
            raise LtlSyntaxError(f"expected {tok!r}, found {got or 'end of input'!r}", pos)

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.binary_temporal()
        while self.peek() == "&":
            self.take()
            left = And(left, self.binary_temporal())
        return left

    def binary_temporal(self) -> Formula:
        left = self.unary()
        if self.peek() in ("U", "R"):
            op = Until if self.take()[0] == "U" else Release
            return op(left, self.binary_temporal())
        return left

    def unary(self) -> Formula:
        tok, pos = self.take()
        if tok in _UNARY:
            return _UNARY[tok](self.unary())
        if tok == "(":
            f = self.implication()
            self.expect(")")
            return f
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in ("U", "R"):
            raise LtlSyntaxError(f"binary operator {tok!r} without left operand", pos)
        if tok and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            return Atom(tok)
        raise LtlSyntaxError(f"unexpected {tok or 'end of input'!r}", pos)


def parse_ltl(text: str, ap: Iterable[str] | None = None) -> Formula:
    """Parse ``text``; if ``ap`` is given, every atom must belong to it."""
    p = _Parser(text)
    f = p.implication()
    tok, pos = p.take()
    if tok:
        raise LtlSyntaxError(f"unexpected {tok!r}", pos)
    if ap is not None:
        unknown = atoms(f) - set(ap)
        if unknown:
            raise ValueError(f"unknown atomic propositions: {sorted(unknown)}")
    return f


def atoms(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Const):
        return set()
    return set().union(*(atoms(c) for c in _children(f)))


def _children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Next, Eventually, Globally)):
        return (f.arg,)
    if isinstance(f, (And, Or, Implies, Until, Release)):
        return (f.left, f.right)
    return ()


def to_string(f: Formula) -> str:
    """Fully parenthesised concrete syntax; ``parse_ltl(to_string(f)) == f``."""
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, (Not, Next, Eventually, Globally)):
        return f"{_SYMBOL[type(f)]} {to_string(f.arg)}"
    return f"({to_string(f.left)} {_SYMBOL[type(f)]} {to_string(f.right)})"




@dataclass(frozen=True)
class LassoWord:
    """The infinite word ``prefix . cycle^omega``."""

    prefix: tuple[frozenset[str], ...]
    cycle: tuple[frozenset[str], ...]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("lasso cycle must be nonempty")

    @classmethod
    def of(cls, prefix: Sequence[Iterable[str]], cycle: Sequence[Iterable[str]]) -> "LassoWord":
        return cls(tuple(frozenset(x) for x in prefix), tuple(frozenset(x) for x in cycle))

    def __len__(self) -> int:
        return len(self.prefix) + len(self.cycle)

    def letter(self, i: int) -> frozenset[str]:
        """Letter at position ``i`` of the infinite word."""
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def successor(self, i: int) -> int:
        """Successor of position ``i`` in the finite position graph."""
        return i + 1 if i + 1 < len(self) else len(self.prefix)


def eval_lasso(f: Formula, w: LassoWord) -> bool:
    """Decide whether ``w`` satisfies ``f``."""
    return 0 in _sat(f, w)


def _sat(f: Formula, w: LassoWord) -> frozenset[int]:
    n = len(w)
    every = frozenset(range(n))
    if isinstance(f, Const):
        return every if f.value else frozenset()
    if isinstance(f, Atom):
        return frozenset(i for i in range(n) if f.name in w.letter(i))
    if isinstance(f, Not):
        return every - _sat(f.arg, w)
    if isinstance(f, And):
        return _sat(f.left, w) & _sat(f.right, w)
    if isinstance(f, Or):
        return _sat(f.left, w) | _sat(f.right, w)
    if isinstance(f, Implies):
        return (every - _sat(f.left, w)) | _sat(f.right, w)
    if isinstance(f, Next):
        inner = _sat(f.arg, w)
        return frozenset(i for i in range(n) if w.successor(i) in inner)
    if isinstance(f, Until):
        return _until(_sat(f.left, w), _sat(f.right, w), w)
    if isinstance(f, Eventually):
        return _until(every, _sat(f.arg, w), w)
    if isinstance(f, Release):
        # a R b == !(!a U !b)
        return every - _until(every - _sat(f.left, w), every - _sat(f.right, w), w)
    if isinstance(f, Globally):
        return every - _until(every, every - _sat(f.arg, w), w)
    raise TypeError(f"not a formula: {f!r}")


def _until(hold: frozenset[int], goal: frozenset[int], w: LassoWord) -> frozenset[int]:
    # least fixed point of  Z = goal | (hold & pre(Z))
    sat = set(goal)
    changed = True
    while changed:
        changed = False
        for i in range(len(w)):
            if i not in sat and i in hold and w.successor(i) in sat:
                sat.add(i)
                changed = True
    return frozenset(sat)
