"""Product of an MDP with an LDBA that monitors the label sequence of its runs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .automata import Ldba
from .mdp import Action, Mdp, mdp_to_dict


@dataclass(frozen=True)
class ProductMdp:
    """``mdp`` is the product itself; the remaining fields relate it to its factors.

    ``state_origin[i] = (s, q)`` and ``action_origin[j] = (a, q, r)`` where the
    product action ``j`` plays ``a`` while the automaton moves ``q -> r``.
    """

    mdp: Mdp
    base: Mdp
    automaton: Ldba
    state_origin: tuple[tuple[int, int], ...]
    action_origin: tuple[tuple[int, int, int], ...]
    accepting: frozenset[int]


def state_name(m: Mdp, a: Ldba, s: int, q: int) -> str:
    return f"({m.states[s]},{a.states[q]})"


def build_product(m: Mdp, a: Ldba) -> ProductMdp:
    """Reachable part of ``m x a``, explored breadth-first from ``(s0, q0)``."""
    missing = set(a.ap) - set(m.ap)
    if missing:
        raise ValueError(f"automaton propositions missing from the MDP: {sorted(missing)}")

    index: dict[tuple[int, int], int] = {}
    origin: list[tuple[int, int]] = []
    queue: deque[tuple[int, int]] = deque()

    def visit(pair: tuple[int, int]) -> int:
        if pair not in index:
            index[pair] = len(origin)
            origin.append(pair)
            queue.append(pair)
        return index[pair]

    visit((m.initial, a.initial))
    raw_actions: list[tuple[int, int, int, int, dict[int, Fraction]]] = []
    while queue:
        s, q = queue.popleft()
        src = index[(s, q)]
        for act in m.enabled[s]:
            for r in sorted(a.successors(q, m.labels[s])):
                dist = {visit((t, r)): p for t, p in sorted(m.actions[act].dist.items())}
                raw_actions.append((src, act, q, r, dist))

    actions = []
    action_origin = []
    enabled: list[list[int]] = [[] for _ in origin]
    for src, act, q, r, dist in raw_actions:
        base_action = m.actions[act]
        name = f"{base_action.name}@{a.states[q]}->{a.states[r]}"
        enabled[src].append(len(actions))
        actions.append(Action(name, src, dist, base_action.reward))
        action_origin.append((act, q, r))
    if any(not e for e in enabled):
        raise ValueError("automaton is not total: some product state has no actions")

    names = tuple(state_name(m, a, s, q) for s, q in origin)
    labels = tuple(m.labels[s] for s, _ in origin)
    prod = Mdp(names, 0, tuple(actions), tuple(tuple(e) for e in enabled), labels, m.ap)
    accepting = frozenset(i for i, (_, q) in enumerate(origin) if q in a.accepting)
    return ProductMdp(prod, m, a, tuple(origin), tuple(action_origin), accepting)


def product_to_dict(p: ProductMdp) -> dict[str, Any]:
    doc = mdp_to_dict(p.mdp)
    doc["accepting"] = [p.mdp.states[i] for i in sorted(p.accepting)]
    return doc
