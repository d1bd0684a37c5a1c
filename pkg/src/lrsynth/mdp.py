"""Finite labelled MDPs with exact rational probabilities and action rewards.

The on-disk format is JSON::

    {
      "states": ["s", "t"],
      "initial": "s",
      "labels": {"s": ["p_s"], "t": ["p_t"]},
      "actions": [
        {"name": "a", "from": "s", "to": {"s": "1"}, "reward": ["1/2"]},
        ...
      ]
    }

Probabilities and rewards may be written as ``"p/q"``, integers or decimals;
all are converted to :class:`fractions.Fraction` without rounding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence


class MdpFormatError(ValueError):
    """Raised when an MDP document cannot be turned into a valid :class:`Mdp`."""


def parse_rational(value: Any, what: str = "value") -> Fraction:
    """Convert ``"p/q"``, an integer, or a decimal (string or JSON number) exactly."""
    if isinstance(value, bool):
        raise MdpFormatError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        # repr() gives the shortest decimal that round-trips, e.g. 0.1 -> "0.1"
        value = repr(value)
    if not isinstance(value, str):
        raise MdpFormatError(f"{what}: expected a number, got {value!r}")
    try:
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise MdpFormatError(f"{what}: cannot parse {value!r} as a rational") from None


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Action:
    name: str
    owner: int
    dist: Mapping[int, Fraction]
    reward: tuple[Fraction, ...] = ()


@dataclass(frozen=True)
class Mdp:
    """An MDP ``(S, A, Act, delta, s0, labels)``.

    States and actions are referred to by index everywhere; ``enabled[s]`` lists
    the indices of the actions available in state ``s``.
    """

    states: tuple[str, ...]
    initial: int
    actions: tuple[Action, ...]
    enabled: tuple[tuple[int, ...], ...]
    labels: tuple[frozenset[str], ...]
    ap: tuple[str, ...]

    @classmethod
    def build(
        cls,
        states: Sequence[str],
        initial: str,
        actions: Iterable[tuple[str, str, Mapping[str, Any], Sequence[Any]]],
        labels: Mapping[str, Iterable[str]] | None = None,
        ap: Iterable[str] = (),
    ) -> "Mdp":
        """Convenience constructor from names: ``actions`` holds ``(name, from, to, reward)``."""
        doc = {
            "states": list(states),
            "initial": initial,
            "labels": {k: list(v) for k, v in (labels or {}).items()},
            "ap": list(ap),
            "actions": [
                {"name": n, "from": f, "to": dict(to), "reward": list(r)}
                for n, f, to, r in actions
            ],
        }
        return mdp_from_dict(doc)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    @property
    def reward_dim(self) -> int:
        return len(self.actions[0].reward) if self.actions else 0

    def state_index(self, name: str) -> int:
        return self.states.index(name)

    def action_index(self, name: str) -> int:
        for i, a in enumerate(self.actions):
            if a.name == name:
                return i
        raise KeyError(name)

    def successors(self, a: int) -> Mapping[int, Fraction]:
        return self.actions[a].dist


def validate_mdp(m: Mdp) -> list[str]:
    """Return every violated structural invariant (empty list when ``m`` is valid)."""
    problems: list[str] = []
    n = len(m.states)
    if len(set(m.states)) != n:
        problems.append("duplicate state names")
    if not 0 <= m.initial < n:
        problems.append(f"initial state index {m.initial} out of range")
    if len(m.enabled) != n:
        problems.append("enabled sets do not cover every state")
    if len(m.labels) != n:
        problems.append("labelling does not cover every state")
    names = [a.name for a in m.actions]
    for name in sorted({x for x in names if names.count(x) > 1}):
        problems.append(f"duplicate action name {name!r}")

    owners: dict[int, list[int]] = {}
    for s, acts in enumerate(m.enabled):
        if not acts:
            problems.append(f"state {m.states[s]!r} has no actions")
        for a in acts:
            owners.setdefault(a, []).append(s)
    for a, act in enumerate(m.actions):
        where = owners.get(a, [])
        if len(where) != 1:
            listed = ", ".join(m.states[s] for s in where) or "none"
            problems.append(f"action {act.name!r} not uniquely owned (listed under: {listed})")
        elif where[0] != act.owner:
            problems.append(f"action {act.name!r} enabled at a state other than its owner")
        total = sum(act.dist.values(), Fraction(0))
        if total != 1:
            problems.append(f"action {act.name!r}: distribution sums to {format_rational(total)}")
        for t, pr in act.dist.items():
            if not 0 <= t < n:
                problems.append(f"action {act.name!r}: successor index {t} out of range")
            if pr < 0:
                problems.append(f"action {act.name!r}: negative probability")
    for a in owners:
        if not 0 <= a < len(m.actions):
            problems.append(f"enabled set refers to unknown action index {a}")
    dims = {len(a.reward) for a in m.actions}
    if len(dims) > 1:
        problems.append(f"reward dimension mismatch: {sorted(dims)}")
    ap = set().union(*m.labels) if m.labels else set()
    if not ap <= set(m.ap):
        problems.append(f"labels use propositions outside ap: {sorted(ap - set(m.ap))}")
    return problems


def parse_mdp(text: str) -> Mdp:
    """Parse an MDP JSON document; raises :class:`MdpFormatError` on any problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MdpFormatError(f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return mdp_from_dict(doc)


def mdp_from_dict(doc: Any) -> Mdp:
    if not isinstance(doc, dict):
        raise MdpFormatError("top level must be a JSON object")
    for key in ("states", "initial", "actions"):
        if key not in doc:
            raise MdpFormatError(f"missing key {key!r}")
    states = doc["states"]
    if not isinstance(states, list) or not states or not all(isinstance(s, str) for s in states):
        raise MdpFormatError("'states' must be a nonempty array of names")
    if len(set(states)) != len(states):
        raise MdpFormatError("duplicate state name")
    index = {s: i for i, s in enumerate(states)}

    def lookup(name: Any, ctx: str) -> int:
        if name not in index:
            raise MdpFormatError(f"{ctx}: unknown state {name!r}")
        return index[name]

    initial = lookup(doc["initial"], "initial")

    raw_labels = doc.get("labels", {}) or {}
    if not isinstance(raw_labels, dict):
        raise MdpFormatError("'labels' must be an object")
    labels: list[frozenset[str]] = [frozenset()] * len(states)
    for name, aps in raw_labels.items():
        s = lookup(name, "labels")
        if not isinstance(aps, list) or not all(isinstance(p, str) for p in aps):
            raise MdpFormatError(f"labels of {name!r} must be an array of names")
        labels[s] = frozenset(aps)

    raw_actions = doc["actions"]
    if not isinstance(raw_actions, list):
        raise MdpFormatError("'actions' must be an array")
    actions: list[Action] = []
    seen: set[str] = set()
    for entry in raw_actions:
        if not isinstance(entry, dict) or "name" not in entry or "from" not in entry or "to" not in entry:
            raise MdpFormatError(f"malformed action entry {entry!r}")
        name = entry["name"]
        if name in seen:
            raise MdpFormatError(f"duplicate action name {name!r}")
        seen.add(name)
        owner = lookup(entry["from"], f"action {name!r}")
        if not isinstance(entry["to"], dict) or not entry["to"]:
            raise MdpFormatError(f"action {name!r}: 'to' must be a nonempty object")
        dist: dict[int, Fraction] = {}
        for t, pr in entry["to"].items():
            q = parse_rational(pr, f"action {name!r} probability")
            if q < 0 or q > 1:
                raise MdpFormatError(f"action {name!r}: probability {pr!r} outside [0,1]")
            if q:
                dist[lookup(t, f"action {name!r}")] = q
        total = sum(dist.values(), Fraction(0))
        if total != 1:
            raise MdpFormatError(f"action {name!r}: distribution sums to {format_rational(total)}")
        reward = tuple(parse_rational(r, f"action {name!r} reward") for r in entry.get("reward", []) or [])
        actions.append(Action(name, owner, dist, reward))

    dims = {len(a.reward) for a in actions}
    if len(dims) > 1:
        dim = max(dims)
        # omitted rewards default to the zero vector
        if any(a.reward and len(a.reward) != dim for a in actions):
            raise MdpFormatError(f"reward dimension mismatch: {sorted(dims)}")
        actions = [a if a.reward else Action(a.name, a.owner, a.dist, (Fraction(0),) * dim) for a in actions]

    enabled: list[list[int]] = [[] for _ in states]
    for i, a in enumerate(actions):
        enabled[a.owner].append(i)
    for s, acts in enumerate(enabled):
        if not acts:
            raise MdpFormatError(f"state {states[s]!r} has no actions")

    declared = doc.get("ap", []) or []
    if not isinstance(declared, list) or not all(isinstance(p, str) for p in declared):
        raise MdpFormatError("'ap' must be an array of names")
    ap = tuple(sorted(set().union(*labels, declared)))
    m = Mdp(tuple(states), initial, tuple(actions), tuple(tuple(e) for e in enabled), tuple(labels), ap)
    problems = validate_mdp(m)
    if problems:
        raise MdpFormatError("; ".join(problems))
    return m


def mdp_to_dict(m: Mdp) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "states": list(m.states),
        "initial": m.states[m.initial],
        "labels": {m.states[s]: sorted(m.labels[s]) for s in range(len(m.states)) if m.labels[s]},
        "actions": [
            {
                "name": a.name,
                "from": m.states[a.owner],
                "to": {m.states[t]: format_rational(p) for t, p in sorted(a.dist.items())},
                "reward": [format_rational(r) for r in a.reward],
            }
            for a in m.actions
        ],
    }
    unused = sorted(set(m.ap) - set().union(*m.labels))
    if unused:
        doc["ap"] = unused
    return doc


def serialize_mdp(m: Mdp) -> str:
    return json.dumps(mdp_to_dict(m), indent=2)
