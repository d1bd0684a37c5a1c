"""Limit-deterministic Buchi automata (LDBA) over the alphabet ``2^AP``.

Transitions are stored per explicit letter, so the limit-determinism conditions
can be checked by enumerating ``Q x 2^AP``:

1. a state of the deterministic part has exactly one successor per letter,
   and that successor is deterministic as well;
2. accepting states are deterministic;
3. a state of the nondeterministic part has exactly one nondeterministic
   successor per letter (plus any number of jumps into the deterministic part).
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import ltl
from .ltl import LassoWord

N, D = "N", "D"


class HoaError(ValueError):
    pass


def all_letters(ap: Sequence[str]) -> list[frozenset[str]]:
    """Every subset of ``ap`` in a fixed order (binary counting, first AP = bit 0)."""
    return [frozenset(p for i, p in enumerate(ap) if mask >> i & 1) for mask in range(1 << len(ap))]


@dataclass(frozen=True)
class Ldba:
    states: tuple[str, ...]
    initial: int
    accepting: frozenset[int]
    ap: tuple[str, ...]
    part: tuple[str, ...]
    transitions: Mapping[tuple[int, frozenset[str]], frozenset[int]]

    def successors(self, q: int, letter: Iterable[str]) -> frozenset[int]:
        """Successors on a letter; propositions outside ``ap`` are ignored."""
        return self.transitions.get((q, frozenset(letter) & frozenset(self.ap)), frozenset())

    @property
    def num_states(self) -> int:
        return len(self.states)

    def is_deterministic(self) -> bool:
        return all(len(v) == 1 for v in self.transitions.values())


def validate_ldba(a: Ldba) -> list[str]:
    """All violations of totality and of the three limit-determinism conditions."""
    problems = []
    n = len(a.states)
    if not 0 <= a.initial < n:
        problems.append(f"initial state {a.initial} out of range")
    if len(a.part) != n or any(x not in (N, D) for x in a.part):
        problems.append("partition must assign N or D to every state")
        return problems
    for q in sorted(a.accepting):
        if a.part[q] != D:
            problems.append(f"condition 2 violated: accepting state {a.states[q]!r} is not in the deterministic part")
    for q in range(n):
        for letter in all_letters(a.ap):
            succ = a.transitions.get((q, letter), frozenset())
            where = f"state {a.states[q]!r}, letter {sorted(letter)}"
            if a.part[q] == D:
                if len(succ) != 1:
                    problems.append(f"condition 1 violated: {where} has {len(succ)} successors")
                if any(a.part[r] != D for r in succ):
                    problems.append(f"condition 1 violated: {where} leaves the deterministic part")
            else:
                n_succ = sum(1 for r in succ if a.part[r] == N)
                if n_succ != 1:
                    problems.append(f"condition 3 violated: {where} has {n_succ} successors in the nondeterministic part")
    return problems


def infer_partition(states: int, ap: Sequence[str], transitions: Mapping) -> tuple[str, ...]:
    """Deterministic part := largest successor-closed set of deterministic states."""
    letters = all_letters(ap)
    det = {q for q in range(states) if all(len(transitions.get((q, l), ())) == 1 for l in letters)}
    changed = True
    while changed:
        changed = False
        for q in sorted(det):
            if any(r not in det for l in letters for r in transitions[(q, l)]):
                det.discard(q)
                changed = True
    return tuple(D if q in det else N for q in range(states))


def make_ldba(
    states: Sequence[str],
    initial: int,
    accepting: Iterable[int],
    ap: Sequence[str],
    edges: Mapping[tuple[int, frozenset[str]], Iterable[int]],
    part: Sequence[str] | None = None,
) -> Ldba:
    trans = {(q, frozenset(l)): frozenset(r) for (q, l), r in edges.items() if r}
    if part is None:
        part = infer_partition(len(states), ap, trans)
    a = Ldba(tuple(states), initial, frozenset(accepting), tuple(ap), tuple(part), trans)
    problems = validate_ldba(a)
    if problems:
        raise ValueError("; ".join(problems))
    return a


# ---------------------------------------------------------------------------
# HOA subset

_GUARD_TOKEN = re.compile(r"\s*(?:(\d+)|([tf])|([!&|()]))")


def _parse_guard(text: str, n_ap: int):
    """Compile a HOA label expression over AP indices into a predicate on bit masks."""
    toks = []
    pos = 0
    while pos < len(text) and text[pos:].strip():
        m = _GUARD_TOKEN.match(text, pos)
        if not m:
            raise HoaError(f"bad label expression {text!r}")
        toks.append(m.group(m.lastindex))
        pos = m.end()
    toks.append("")
    i = 0

    def disj():
        nonlocal i
        terms = [conj()]
        while toks[i] == "|":
            i += 1
            terms.append(conj())
        return lambda v: any(t(v) for t in terms)

    def conj():
        nonlocal i
        terms = [atom()]
        while toks[i] == "&":
            i += 1
            terms.append(atom())
        return lambda v: all(t(v) for t in terms)

    def atom():
        nonlocal i
        tok = toks[i]
        i += 1
        if tok == "!":
            inner = atom()
            return lambda v: not inner(v)
        if tok == "(":
            inner = disj()
            if toks[i] != ")":
                raise HoaError(f"unbalanced parentheses in {text!r}")
            i += 1
            return inner
        if tok == "t":
            return lambda v: True
        if tok == "f":
            return lambda v: False
        if tok.isdigit():
            k = int(tok)
            if k >= n_ap:
                raise HoaError(f"AP index {k} out of range in {text!r}")
            return lambda v: bool(v >> k & 1)
        raise HoaError(f"bad label expression {text!r}")

    pred = disj()
    if toks[i] != "":
        raise HoaError(f"trailing input in label expression {text!r}")
    return pred


def parse_hoa(text: str) -> Ldba:
    """Read an automaton in the supported HOA subset (state-based Buchi acceptance)."""
    header, _, rest = text.partition("--BODY--")
    if not _:
        raise HoaError("missing --BODY--")
    body, _, _ = rest.partition("--END--")
    fields: dict[str, str] = {}
    for line in header.splitlines():
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise HoaError(f"malformed header line {line!r}")
        if key.strip() in fields and key.strip() == "Start":
            raise HoaError("only a single initial state is supported")
        fields[key.strip()] = value.strip()
    if fields.get("HOA") != "v1":
        raise HoaError("expected 'HOA: v1'")
    try:
        n_states = int(fields["States"])
        start = fields["Start"].split()
    except (KeyError, ValueError):
        raise HoaError("header needs States: and Start:") from None
    if len(start) != 1 or "&" in fields["Start"]:
        raise HoaError("only a single initial state is supported")
    acc = " ".join(fields.get("Acceptance", "").split())
    if acc not in ("1 Inf(0)",):
        raise HoaError(f"unsupported acceptance condition {acc!r}")
    if "acc-name" in fields and fields["acc-name"].split()[0] != "Buchi":
        raise HoaError(f"unsupported acceptance name {fields['acc-name']!r}")
    ap_field = fields.get("AP", "0")
    ap_count, *names = re.findall(r'"[^"]*"|\S+', ap_field)
    ap = [n.strip('"') for n in names]
    if int(ap_count) != len(ap):
        raise HoaError("AP count does not match the listed names")

    state_names = [str(i) for i in range(n_states)]
    accepting: set[int] = set()
    edges: dict[tuple[int, frozenset[str]], set[int]] = {}
    letters = list(enumerate(all_letters(ap)))
    current = None
    for raw in body.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("State:"):
            m = re.fullmatch(r'State:\s*(\d+)\s*("[^"]*")?\s*(\{[\d\s]*\})?', line)
            if not m:
                raise HoaError(f"unsupported state line {line!r}")
            current = int(m.group(1))
            if current >= n_states:
                raise HoaError(f"state {current} out of range")
            if m.group(2):
                state_names[current] = m.group(2).strip('"')
            if m.group(3):
                marks = m.group(3).strip("{}").split()
                if marks and marks != ["0"]:
                    raise HoaError(f"unsupported acceptance marks {m.group(3)}")
                if marks:
                    accepting.add(current)
            continue
        if current is None:
            raise HoaError("edge before any State: line")
        m = re.fullmatch(r"\[([^\]]*)\]\s*(\d+)\s*(\{.*\})?", line)
        if not m:
            raise HoaError(f"unsupported edge {line!r}")
        if m.group(3):
            raise HoaError("transition-based acceptance is not supported")
        dest = int(m.group(2))
        if dest >= n_states:
            raise HoaError(f"edge target {dest} out of range")
        guard = _parse_guard(m.group(1), len(ap))
        for mask, letter in letters:
            if guard(mask):
                edges.setdefault((current, letter), set()).add(dest)

    for q in range(n_states):
        for _, letter in letters:
            if not edges.get((q, letter)):
                raise HoaError(f"non-total transition relation: state {q} has no successor on {sorted(letter)}")
    start_state = int(start[0])
    if start_state >= n_states:
        raise HoaError("start state out of range")
    trans = {k: frozenset(v) for k, v in edges.items()}
    part = infer_partition(n_states, ap, trans)
    a = Ldba(tuple(state_names), start_state, frozenset(accepting), tuple(ap), part, trans)
    problems = validate_ldba(a)
    if problems:
        raise HoaError("; ".join(problems))
    return a


def serialize_hoa(a: Ldba) -> str:
    def guard(letter: frozenset[str]) -> str:
        if not a.ap:
            return "t"
        return " & ".join(str(i) if p in letter else f"!{i}" for i, p in enumerate(a.ap))

    lines = [
        "HOA: v1",
        f"States: {len(a.states)}",
        f"Start: {a.initial}",
        "AP: " + " ".join([str(len(a.ap))] + [f'"{p}"' for p in a.ap]),
        "acc-name: Buchi",
        "Acceptance: 1 Inf(0)",
        "--BODY--",
    ]
    for q, name in enumerate(a.states):
        lines.append(f'State: {q} "{name}"' + (" {0}" if q in a.accepting else ""))
        for letter in all_letters(a.ap):
            for r in sorted(a.transitions.get((q, letter), ())):
                lines.append(f"[{guard(letter)}] {r}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# builtin automata

FAMILIES = ("true", "GF", "FG", "F", "G", "U", "GF->GF")
_ARITY = {"true": 0, "GF": 1, "FG": 1, "F": 1, "G": 1, "U": 2, "GF->GF": 2}


def _deterministic(states, initial, accepting, ap, step) -> Ldba:
    edges = {(q, l): {step(q, l)} for q in range(len(states)) for l in all_letters(ap)}
    return make_ldba(states, initial, accepting, ap, edges, part=[D] * len(states))


def builtin_ldba(family: str, params: Sequence[str] = ()) -> Ldba:
    """Hand-built automaton for one of the supported formula families.

    ``true``: accept everything; ``GF p``, ``FG p``, ``F p``, ``G p``,
    ``p U q`` and ``(GF a) -> (GF b)``.
    """
    if family not in _ARITY:
        raise ValueError(f"unknown automaton family {family!r}; known: {', '.join(FAMILIES)}")
    params = tuple(params)
    if len(params) != _ARITY[family]:
        raise ValueError(f"family {family!r} takes {_ARITY[family]} proposition(s), got {len(params)}")
    if len(set(params)) != len(params):
        raise ValueError("propositions of a builtin family must be distinct")

    if family == "true":
        return _deterministic(["q0"], 0, [0], (), lambda q, l: 0)
    if family == "GF":
        (p,) = params
        return _deterministic(["wait", "seen"], 0, [1], params, lambda q, l: 1 if p in l else 0)
    if family == "F":
        (p,) = params
        return _deterministic(["wait", "done"], 0, [1], params, lambda q, l: 1 if q == 1 or p in l else 0)
    if family == "G":
        (p,) = params
        return _deterministic(["ok", "fail"], 0, [0], params, lambda q, l: 0 if q == 0 and p in l else 1)
    if family == "U":
        p, r = params

        def step(q, l):
            if q != 0:
                return q
            return 1 if r in l else 0 if p in l else 2

        return _deterministic(["wait", "done", "fail"], 0, [1], params, step)
    if family == "FG":
        (p,) = params
        edges = {}
        for l in all_letters(params):
            # the initial state may jump into "hold" on any p-letter
            edges[(0, l)] = {0, 1} if p in l else {0}
            edges[(1, l)] = {1} if p in l else {2}
            edges[(2, l)] = {2}
        return make_ldba(["wait", "hold", "fail"], 0, [1], params, edges, part=[N, D, D])
    # (GF a) -> (GF b)  ==  FG !a  |  GF b
    a, b = params
    edges = {}
    for l in all_letters(params):
        jump = {1 if b in l else 2}
        if a not in l:
            jump.add(3)
        edges[(0, l)] = {0} | jump
        edges[(1, l)] = edges[(2, l)] = {1 if b in l else 2}
        edges[(3, l)] = {4 if a in l else 3}
        edges[(4, l)] = {4}
    return make_ldba(["wait", "b_seen", "b_wait", "no_a", "fail"], 0, [1, 3], params, edges,
                     part=[N, D, D, D, D])


def builtin_formula(family: str, params: Sequence[str] = ()) -> ltl.Formula:
    """The LTL formula whose language ``builtin_ldba(family, params)`` accepts."""
    P = [ltl.Atom(p) for p in params]
    return {
        "true": lambda: ltl.TRUE,
        "GF": lambda: ltl.Globally(ltl.Eventually(P[0])),
        "FG": lambda: ltl.Eventually(ltl.Globally(P[0])),
        "F": lambda: ltl.Eventually(P[0]),
        "G": lambda: ltl.Globally(P[0]),
        "U": lambda: ltl.Until(P[0], P[1]),
        "GF->GF": lambda: ltl.Implies(ltl.Globally(ltl.Eventually(P[0])), ltl.Globally(ltl.Eventually(P[1]))),
    }[family]()


def match_builtin(f: ltl.Formula) -> tuple[str, tuple[str, ...]] | None:
    """Recognise ``f`` as a builtin family up to renaming of atoms."""
    A, G, F, U = ltl.Atom, ltl.Globally, ltl.Eventually, ltl.Until
    if f == ltl.TRUE:
        return "true", ()
    if isinstance(f, G) and isinstance(f.arg, F) and isinstance(f.arg.arg, A):
        return "GF", (f.arg.arg.name,)
    if isinstance(f, F) and isinstance(f.arg, G) and isinstance(f.arg.arg, A):
        return "FG", (f.arg.arg.name,)
    if isinstance(f, F) and isinstance(f.arg, A):
        return "F", (f.arg.name,)
    if isinstance(f, G) and isinstance(f.arg, A):
        return "G", (f.arg.name,)
    if isinstance(f, U) and isinstance(f.left, A) and isinstance(f.right, A) and f.left != f.right:
        return "U", (f.left.name, f.right.name)
    if isinstance(f, ltl.Implies):
        left, right = match_builtin(f.left), match_builtin(f.right)
        if left and right and left[0] == right[0] == "GF" and left[1] != right[1]:
            return "GF->GF", left[1] + right[1]
    return None


# ---------------------------------------------------------------------------
# acceptance of lasso words

def accepts_lasso(a: Ldba, w: LassoWord) -> bool:
    """Does some run of ``a`` on ``w`` visit accepting states infinitely often?

    Explores the finite graph of (automaton state, word position) pairs and
    looks for a reachable accepting node that lies on a cycle.
    """
    start = (a.initial, 0)

    def succ(node):
        q, i = node
        return [(r, w.successor(i)) for r in sorted(a.successors(q, w.letter(i)))]

    reachable = {start}
    stack = [start]
    while stack:
        for nxt in succ(stack.pop()):
            if nxt not in reachable:
                reachable.add(nxt)
                stack.append(nxt)
    for node in sorted(reachable):
        if node[0] not in a.accepting:
            continue
        # is ``node`` reachable from one of its successors?
        seen = set()
        stack = succ(node)
        while stack:
            cur = stack.pop()
            if cur == node:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(succ(cur))
    return False


def ltl_automaton(f: ltl.Formula) -> Ldba:
    match = match_builtin(f)
    if match is None:
        raise ValueError(
            f"formula {ltl.to_string(f)!r} is not a supported builtin family "
            "(GF p, FG p, F p, G p, p U q, (GF a) -> (GF b)); supply an LDBA in HOA format instead"
        )
    return builtin_ldba(*match)
