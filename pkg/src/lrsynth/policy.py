"""Finite-memory stochastic-update policies and their extraction from LP solutions.

A policy is a triple ``(sigma_u, sigma_n, alpha)``: ``alpha`` is the initial
memory distribution, ``sigma_n(s, m)`` the distribution over actions enabled at
``s`` and ``sigma_u(a, s', m)`` the distribution of the next memory element
after ``a`` was played and ``s'`` was entered.

Extracted policies have two memory elements. In ``TRANSIENT`` mode the policy
follows the transient flow ``y``; at each arrival it switches to
``RECURRENT`` with probability ``y_s / (y_s + sum_b y_b)``. In ``RECURRENT``
mode it stays inside the MEC it switched in, playing a memoryless policy whose
action frequencies are those of the recurrent flow ``x`` perturbed by a
fraction ``epsilon`` of the frequencies of uniform play in that MEC. The
perturbation makes every state of the MEC recurrent while moving each
aggregated frequency by at most ``epsilon``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Mapping, Sequence

from .linalg import solve_vector
from .lp import LongRunSpec, LpSolution
from .mdp import Mdp, format_rational, parse_rational
from .mec import Mec
from .product import ProductMdp

TRANSIENT = "TRANSIENT"
RECURRENT = "RECURRENT"

Dist = Mapping[Any, Fraction]


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    memory: tuple[Hashable, ...]
    alpha: Mapping[Hashable, Fraction]
    sigma_n: Mapping[tuple[int, Hashable], Dist]
    sigma_u: Mapping[tuple[int, int, Hashable], Dist]


@dataclass(frozen=True)
class SynthesizedPolicy(Policy):
    epsilon: Fraction = Fraction(0)
    delta: Fraction = Fraction(0)


def _dirac(x) -> dict:
    return {x: Fraction(1)}


def _first_action(m: Mdp, s: int) -> int:
    return min(m.enabled[s], key=lambda a: m.actions[a].name)


def epsilon_for(p: ProductMdp, delta: Fraction) -> Fraction:
    """``delta / (|Q| * |A| * max(1, R_max))`` with ``A`` the actions of the original MDP."""
    r_max = max((abs(r) for act in p.base.actions for r in act.reward), default=Fraction(0))
    return Fraction(delta) / (p.automaton.num_states * p.base.num_actions * max(Fraction(1), r_max))


def uniform_frequencies(m: Mdp, mec: Mec) -> dict[int, Fraction]:
    """Long-run action frequencies of uniformly random play restricted to ``mec``."""
    states = sorted(mec.states)
    pos = {s: i for i, s in enumerate(states)}
    choice = {s: [a for a in m.enabled[s] if a in mec.actions] for s in states}
    n = len(states)
    # stationary distribution: pi (P - I) = 0, last equation replaced by sum(pi) = 1
    rows: list[dict[int, Fraction]] = [dict() for _ in range(n)]
    for s in states:
        k = len(choice[s])
        for a in choice[s]:
            for t, pr in m.actions[a].dist.items():
                rows[pos[t]][pos[s]] = rows[pos[t]].get(pos[s], Fraction(0)) + pr / k
        rows[pos[s]][pos[s]] = rows[pos[s]].get(pos[s], Fraction(0)) - 1
    rows[-1] = {i: Fraction(1) for i in range(n)}
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    pi = solve_vector(rows, rhs, n)
    return {a: pi[pos[s]] / len(choice[s]) for s in states for a in choice[s]}


def extract_policy(
    sol: LpSolution, p: ProductMdp, mecs: Sequence[Mec], spec: LongRunSpec | None, delta: Fraction
) -> SynthesizedPolicy:
    """Turn a feasible LP solution into a 2-memory policy that delta-satisfies the specification."""
    delta = Fraction(delta)
    if delta <= 0:
        raise PolicyError(
            "delta must be positive: finite-memory policies can only delta-satisfy the "
            "specification in general (exact satisfaction may need unbounded memory)"
        )
    if not sol.feasible:
        raise PolicyError(f"LP solution is {sol.status}, nothing to extract")
    m = p.mdp
    eps = epsilon_for(p, delta)
    zero = Fraction(0)

    sigma_n: dict[tuple[int, str], dict[int, Fraction]] = {}
    switch: dict[int, dict[str, Fraction]] = {}
    for s in range(m.num_states):
        flow = {a: sol.ya(a) for a in m.enabled[s]}
        out = sum(flow.values(), zero)
        total = out + sol.ys(s)
        if out > 0:
            sigma_n[(s, TRANSIENT)] = {a: v / out for a, v in flow.items() if v}
        else:
            sigma_n[(s, TRANSIENT)] = _dirac(_first_action(m, s))
        if total > 0:
            switch[s] = {k: v for k, v in ((RECURRENT, sol.ys(s) / total), (TRANSIENT, out / total)) if v}
        else:
            switch[s] = _dirac(TRANSIENT)

    for c in mecs:
        mass = sum((sol.x(a) for a in c.actions), zero)
        if mass == 0:
            continue
        z = uniform_frequencies(m, c)
        mixed = {a: (1 - eps) * sol.x(a) / mass + eps * z[a] for a in c.actions}
        for s in c.states:
            acts = [a for a in m.enabled[s] if a in c.actions]
            at_s = sum((mixed[a] for a in acts), zero)
            sigma_n[(s, RECURRENT)] = {a: mixed[a] / at_s for a in acts if mixed[a]}

    sigma_u: dict[tuple[int, int, str], dict[str, Fraction]] = {}
    for a, act in enumerate(m.actions):
        for t in act.dist:
            sigma_u[(a, t, TRANSIENT)] = switch[t]
            sigma_u[(a, t, RECURRENT)] = _dirac(RECURRENT)

    return SynthesizedPolicy(
        memory=(TRANSIENT, RECURRENT),
        alpha=switch[m.initial],
        sigma_n=sigma_n,
        sigma_u=sigma_u,
        epsilon=eps,
        delta=delta,
    )


def project_policy(sp: Policy, p: ProductMdp) -> Policy:
    """The same behaviour as a policy on the original MDP.

    Memory becomes ``(automaton state, mode)``; the automaton move chosen by a
    product action is resolved in the memory update, which knows the played
    action and hence the state it was played from.
    """
    aut = p.automaton
    state_of = {pair: i for i, pair in enumerate(p.state_origin)}
    memory = tuple((q, mode) for q in range(aut.num_states) for mode in sp.memory)

    sigma_n: dict[tuple[int, Hashable], dict[int, Fraction]] = {}
    for (ps, mode), dist in sp.sigma_n.items():
        s, q = p.state_origin[ps]
        out: dict[int, Fraction] = {}
        for pa, pr in dist.items():
            a = p.action_origin[pa][0]
            out[a] = out.get(a, Fraction(0)) + pr
        sigma_n[(s, (q, mode))] = out

    sigma_u: dict[tuple[int, int, Hashable], dict[Hashable, Fraction]] = {}
    for (ps, mode), dist in sp.sigma_n.items():
        s, q = p.state_origin[ps]
        marginal = sigma_n[(s, (q, mode))]
        for pa, pr in dist.items():
            a, _, r = p.action_origin[pa]
            for t in p.base.actions[a].dist:
                target = state_of[(t, r)]
                entry = sigma_u.setdefault((a, t, (q, mode)), {})
                for new_mode, pu in sp.sigma_u[(pa, target, mode)].items():
                    key = (r, new_mode)
                    entry[key] = entry.get(key, Fraction(0)) + pr / marginal[a] * pu
    alpha = {(aut.initial, mode): pr for mode, pr in sp.alpha.items()}
    return Policy(memory, alpha, sigma_n, sigma_u)


def _mode(x: Hashable) -> Hashable:
    return x[1] if isinstance(x, tuple) else x


def validate_policy(m: Mdp, pol: Policy) -> list[str]:
    """Distributions sum to one and only use enabled actions and known memory."""
    problems = []
    mem = set(pol.memory)

    def check(dist: Dist, what: str, support_ok) -> None:
        total = sum(dist.values(), Fraction(0))
        if total != 1:
            problems.append(f"{what}: probabilities sum to {format_rational(total)}")
        for k, v in dist.items():
            if v < 0:
                problems.append(f"{what}: negative probability")
            if not support_ok(k):
                problems.append(f"{what}: invalid outcome {k!r}")

    check(pol.alpha, "alpha", lambda k: k in mem)
    for (s, mm), dist in pol.sigma_n.items():
        check(dist, f"sigma_n({m.states[s]}, {mm})", lambda a, s=s: a in m.enabled[s])
    for (a, t, mm), dist in pol.sigma_u.items():
        check(dist, f"sigma_u({m.actions[a].name}, {m.states[t]}, {mm})", lambda k: k in mem)
        if _mode(mm) == RECURRENT and any(_mode(k) == TRANSIENT for k, v in dist.items() if v):
            problems.append("sigma_u moves from RECURRENT back to TRANSIENT")
    return problems


# ---------------------------------------------------------------------------
# JSON

def _mem_str(x: Hashable, aut_names: Sequence[str] | None) -> str:
    if isinstance(x, tuple):
        q, mode = x
        return f"{aut_names[q]}/{mode}"
    return str(x)


def policy_to_dict(pol: Policy, m: Mdp, aut_names: Sequence[str] | None = None) -> dict[str, Any]:
    """Stable JSON layout: entries sorted by state/action index, then memory order."""
    mem_rank = {x: i for i, x in enumerate(pol.memory)}
    ms = lambda x: _mem_str(x, aut_names)  # noqa: E731

    def dist_out(d: Dist, key) -> dict[str, str]:
        return {key(k): format_rational(v) for k, v in sorted(d.items(), key=lambda kv: _sort_key(kv[0], mem_rank))}

    doc: dict[str, Any] = {
        "memory": [ms(x) for x in pol.memory],
        "alpha": dist_out(pol.alpha, ms),
        "sigma_n": [
            {"state": m.states[s], "memory": ms(mm), "dist": dist_out(d, lambda a: m.actions[a].name)}
            for (s, mm), d in sorted(pol.sigma_n.items(), key=lambda kv: (kv[0][0], mem_rank[kv[0][1]]))
        ],
        "sigma_u": [
            {"action": m.actions[a].name, "state": m.states[t], "memory": ms(mm), "dist": dist_out(d, ms)}
            for (a, t, mm), d in sorted(pol.sigma_u.items(), key=lambda kv: (kv[0][0], kv[0][1], mem_rank[kv[0][2]]))
        ],
    }
    if isinstance(pol, SynthesizedPolicy):
        doc["epsilon"] = format_rational(pol.epsilon)
        doc["delta"] = format_rational(pol.delta)
    return doc


def _sort_key(k, mem_rank):
    return (0, mem_rank[k]) if k in mem_rank else (1, k)


def policy_from_dict(doc: Mapping[str, Any], m: Mdp) -> SynthesizedPolicy:
    """Inverse of :func:`policy_to_dict` for two-mode policies on ``m``."""
    try:
        memory = tuple(doc["memory"])
        if set(memory) != {TRANSIENT, RECURRENT}:
            raise PolicyError(f"unsupported memory elements {memory}")
        states = {name: i for i, name in enumerate(m.states)}
        actions = {a.name: i for i, a in enumerate(m.actions)}

        def lookup(table, name, what):
            if name not in table:
                raise PolicyError(f"policy refers to unknown {what} {name!r}")
            return table[name]

        def dist_in(d, key):
            return {key(k): parse_rational(v, "policy probability") for k, v in d.items()}

        def mem(x):
            return lookup({x: x for x in memory}, x, "memory element")

        alpha = dist_in(doc["alpha"], mem)
        sigma_n = {
            (lookup(states, e["state"], "state"), mem(e["memory"])):
                dist_in(e["dist"], lambda a: lookup(actions, a, "action"))
            for e in doc["sigma_n"]
        }
        sigma_u = {
            (lookup(actions, e["action"], "action"), lookup(states, e["state"], "state"), mem(e["memory"])):
                dist_in(e["dist"], mem)
            for e in doc["sigma_u"]
        }
        eps = parse_rational(doc.get("epsilon", "0"), "epsilon")
        delta = parse_rational(doc.get("delta", "0"), "delta")
    except (KeyError, TypeError, AttributeError) as e:
        raise PolicyError(f"malformed policy document: {e}") from None
    pol = SynthesizedPolicy(memory, alpha, sigma_n, sigma_u, eps, delta)
    problems = validate_policy(m, pol)
    if problems:
        raise PolicyError("; ".join(problems))
    return pol


def dump_policy(pol: Policy, m: Mdp, aut_names: Sequence[str] | None = None) -> str:
    return json.dumps(policy_to_dict(pol, m, aut_names), indent=2)
