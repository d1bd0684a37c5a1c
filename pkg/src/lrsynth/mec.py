"""Maximal end component decomposition."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .graph import tarjan_scc
from .mdp import Mdp
from .product import ProductMdp


@dataclass(frozen=True)
class Mec:
    states: frozenset[int]
    actions: frozenset[int]
    accepting: bool = False


def compute_mecs(m: Mdp | ProductMdp) -> list[Mec]:
    """MECs of ``m``, sorted by smallest state index.

    Repeatedly splits the candidate state sets into SCCs of the graph formed by
    the surviving actions, discarding actions that can leave their SCC and
    states left without actions, until nothing changes.
    """
    if isinstance(m, ProductMdp):
        m = m.mdp
    alive = set(range(m.num_actions))
    comp_of = {s: 0 for s in range(m.num_states)}

    while True:
        def succ(s):
            return [t for a in m.enabled[s] if a in alive for t in m.actions[a].dist]

        sccs = tarjan_scc(sorted(comp_of), succ)
        new_comp = {s: i for i, c in enumerate(sccs) for s in c}
        changed = False
        for a in sorted(alive):
            owner = m.actions[a].owner
            if owner not in new_comp or any(new_comp.get(t) != new_comp[owner] for t in m.actions[a].dist):
                alive.discard(a)
                changed = True
        for s in list(new_comp):
            if not any(a in alive for a in m.enabled[s]):
                del new_comp[s]
                changed = True
        if not changed and new_comp == comp_of:
            break
        comp_of = new_comp

    groups: dict[int, set[int]] = {}
    for s, c in comp_of.items():
        groups.setdefault(c, set()).add(s)
    mecs = [
        Mec(frozenset(states), frozenset(a for s in states for a in m.enabled[s] if a in alive))
        for states in groups.values()
    ]
    return sorted(mecs, key=lambda c: min(c.states))


def accepting_mecs(p: ProductMdp, mecs: Sequence[Mec]) -> list[Mec]:
    """The MECs containing an accepting product state, flagged as accepting."""
    return [replace(c, accepting=True) for c in mecs if c.states & p.accepting]
