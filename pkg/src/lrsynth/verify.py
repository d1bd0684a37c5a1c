"""Exact analysis of the Markov chain a policy induces, and Monte Carlo cross-checks."""
from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping

from .graph import tarjan_scc
from .linalg import solve, solve_vector
from .lp import LongRunSpec
from .mdp import Mdp, format_rational
from .policy import Policy
from .product import ProductMdp

Location = tuple[int, Hashable, int]  # (state, memory, action about to be played)


class ChainError(ValueError):
    pass


@dataclass
class InducedChain:
    mdp: Mdp
    locations: list[Location]
    transitions: list[dict[int, Fraction]]
    initial: dict[int, Fraction]
    accepting: list[bool]

    def __len__(self) -> int:
        return len(self.locations)

    def label(self, i: int) -> frozenset[str]:
        return self.mdp.labels[self.locations[i][0]]

    def reward(self, i: int) -> tuple[Fraction, ...]:
        return self.mdp.actions[self.locations[i][2]].reward


def induced_chain(
    p: ProductMdp | Mdp,
    pol: Policy,
    accepting: Callable[[int, Hashable], bool] | None = None,
) -> InducedChain:
    """Reachable part of the chain on locations ``(s, m, a)``.

    ``P((s,m,a), (s',m',a')) = delta(a)(s') * sigma_u(a,s',m)(m') * sigma_n(s',m')(a')``.
    For a product, a location is accepting when its product state is.
    """
    if isinstance(p, ProductMdp):
        m = p.mdp
        if accepting is None:
            accepting = lambda s, _mem: s in p.accepting  # noqa: E731
    else:
        m = p
    if accepting is None:
        accepting = lambda s, _mem: False  # noqa: E731

    def next_move(s: int, mem: Hashable) -> Mapping[int, Fraction]:
        try:
            return pol.sigma_n[(s, mem)]
        except KeyError:
            raise ChainError(f"policy has no next move for state {m.states[s]!r} in memory {mem!r}") from None

    index: dict[Location, int] = {}
    locations: list[Location] = []
    transitions: list[dict[int, Fraction]] = []

    def visit(loc: Location) -> int:
        if loc not in index:
            index[loc] = len(locations)
            locations.append(loc)
        return index[loc]

    initial: dict[int, Fraction] = {}
    for mem, pm in sorted(pol.alpha.items(), key=lambda kv: repr(kv[0])):
        for a, pa in sorted(next_move(m.initial, mem).items()):
            if pm * pa:
                i = visit((m.initial, mem, a))
                initial[i] = initial.get(i, Fraction(0)) + pm * pa

    k = 0
    while k < len(locations):
        s, mem, a = locations[k]
        row: dict[int, Fraction] = {}
        for t, pt in sorted(m.actions[a].dist.items()):
            try:
                update = pol.sigma_u[(a, t, mem)]
            except KeyError:
                raise ChainError(
                    f"policy has no memory update for {m.actions[a].name!r} into {m.states[t]!r} from {mem!r}"
                ) from None
            for new_mem, pu in sorted(update.items(), key=lambda kv: repr(kv[0])):
                if not pu:
                    continue
                for b, pb in sorted(next_move(t, new_mem).items()):
                    if pb:
                        j = visit((t, new_mem, b))
                        row[j] = row.get(j, Fraction(0)) + pt * pu * pb
        transitions.append(row)
        k += 1
    acc = [bool(accepting(s, mem)) for s, mem, _ in locations]
    return InducedChain(m, locations, transitions, initial, acc)


def memoryless_policy(m: Mdp, choice: Mapping[int, Mapping[int, Fraction]]) -> Policy:
    """Wrap a memoryless policy ``state -> distribution over actions`` as a policy triple."""
    sigma_u = {(a, t, 0): {0: Fraction(1)} for a, act in enumerate(m.actions) for t in act.dist}
    return Policy((0,), {0: Fraction(1)}, {(s, 0): dict(d) for s, d in choice.items()}, sigma_u)


@dataclass
class ChainAnalysis:
    bsccs: list[list[int]]
    reach: list[Fraction]
    stationary: list[dict[int, Fraction]]
    ap_frequency: dict[str, Fraction]
    action_frequency: dict[int, Fraction]
    lra: tuple[Fraction, ...]
    ltl_probability: Fraction

    def frequency(self, ap: str) -> Fraction:
        return self.ap_frequency.get(ap, Fraction(0))


def analyze_chain(c: InducedChain) -> ChainAnalysis:
    n = len(c)
    sccs = tarjan_scc(range(n), lambda i: c.transitions[i].keys())
    comp = {i: k for k, scc in enumerate(sccs) for i in scc}
    bsccs = [scc for k, scc in enumerate(sccs) if all(comp[j] == k for i in scc for j in c.transitions[i])]
    bsccs.sort()
    in_bscc = {i: b for b, scc in enumerate(bsccs) for i in scc}
    transient = [i for i in range(n) if i not in in_bscc]
    tpos = {i: k for k, i in enumerate(transient)}

    # absorption probabilities: (I - P_TT) H = P_TB
    absorb: list[list[Fraction]] = []
    if transient:
        rows = []
        rhs = []
        for i in transient:
            row = {tpos[i]: Fraction(1)}
            out = [Fraction(0)] * len(bsccs)
            for j, pr in c.transitions[i].items():
                if j in tpos:
                    row[tpos[j]] = row.get(tpos[j], Fraction(0)) - pr
                else:
                    out[in_bscc[j]] += pr
            rows.append(row)
            rhs.append(out)
        absorb = solve(rows, rhs, len(transient))
    reach = [Fraction(0)] * len(bsccs)
    for i, pr in c.initial.items():
        if i in in_bscc:
            reach[in_bscc[i]] += pr
        else:
            for b in range(len(bsccs)):
                reach[b] += pr * absorb[tpos[i]][b]

    stationary = []
    for scc in bsccs:
        pos = {i: k for k, i in enumerate(scc)}
        k = len(scc)
        rows = [dict() for _ in range(k)]
        for i in scc:
            for j, pr in c.transitions[i].items():
                rows[pos[j]][pos[i]] = rows[pos[j]].get(pos[i], Fraction(0)) + pr
            rows[pos[i]][pos[i]] = rows[pos[i]].get(pos[i], Fraction(0)) - 1
        rows[-1] = {t: Fraction(1) for t in range(k)}
        pi = solve_vector(rows, [Fraction(0)] * (k - 1) + [Fraction(1)], k)
        stationary.append({i: pi[pos[i]] for i in scc})

    ap_freq: dict[str, Fraction] = {p: Fraction(0) for p in c.mdp.ap}
    act_freq: dict[int, Fraction] = {}
    dim = c.mdp.reward_dim
    lra = [Fraction(0)] * dim
    ltl = Fraction(0)
    for b, dist in enumerate(stationary):
        w = reach[b]
        if not w:
            continue
        for i, pi in dist.items():
            mass = w * pi
            s, _, a = c.locations[i]
            for p in c.mdp.labels[s]:
                ap_freq[p] = ap_freq.get(p, Fraction(0)) + mass
            act_freq[a] = act_freq.get(a, Fraction(0)) + mass
            for d, r in enumerate(c.mdp.actions[a].reward):
                lra[d] += mass * r
        if any(c.accepting[i] for i in bsccs[b]):
            ltl += w
    return ChainAnalysis(bsccs, reach, stationary, ap_freq, act_freq, tuple(lra), ltl)


# ---------------------------------------------------------------------------
# checking against a specification

@dataclass
class CheckEntry:
    kind: str
    name: str
    value: Fraction
    lower: Fraction | None
    upper: Fraction | None
    margin: Fraction

    @property
    def passed(self) -> bool:
        return self.margin >= 0

    def to_dict(self) -> dict[str, Any]:
        fmt = lambda q: None if q is None else format_rational(q)  # noqa: E731
        return {"kind": self.kind, "name": self.name, "value": fmt(self.value),
                "lower": fmt(self.lower), "upper": fmt(self.upper),
                "margin": fmt(self.margin), "passed": self.passed}


@dataclass
class VerificationReport:
    delta: Fraction
    entries: list[CheckEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, kind: str, name: str) -> CheckEntry:
        return next(e for e in self.entries if e.kind == kind and e.name == name)

    def to_dict(self) -> dict[str, Any]:
        return {"delta": format_rational(self.delta), "passed": self.passed,
                "checks": [e.to_dict() for e in self.entries]}


def check_spec(an: ChainAnalysis, spec: LongRunSpec, delta: Fraction = Fraction(0),
               check_ltl: bool | None = None) -> VerificationReport:
    """Steady-state intervals widened by ``delta``, rewards lowered by ``delta``, LTL exact.

    The LTL threshold is checked when ``check_ltl`` is true, or by default
    whenever ``theta > 0``.
    """
    delta = Fraction(delta)
    report = VerificationReport(delta)
    if check_ltl is None:
        check_ltl = spec.theta > 0
    if check_ltl:
        v = an.ltl_probability
        report.entries.append(CheckEntry("ltl", spec.ltl or "ltl", v, spec.theta, None, v - spec.theta))
    for c in spec.sss:
        v = an.frequency(c.ap)
        lo, hi = c.lower - delta, c.upper + delta
        report.entries.append(CheckEntry("sss", c.ap, v, lo, hi, min(v - lo, hi - v)))
    for i, r in enumerate(spec.reward_thresholds):
        v = an.lra[i]
        report.entries.append(CheckEntry("reward", f"dim{i}", v, r - delta, None, v - (r - delta)))
    return report


# ---------------------------------------------------------------------------
# simulation

@dataclass
class SimulationResult:
    steps: int
    seed: int
    action_frequency: dict[int, float]
    ap_frequency: dict[str, float]
    action_se: dict[int, float]
    ap_se: dict[str, float]

    def to_dict(self, m: Mdp) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "steps": self.steps,
            "action_frequency": {m.actions[a].name: f for a, f in sorted(self.action_frequency.items())},
            "action_standard_error": {m.actions[a].name: f for a, f in sorted(self.action_se.items())},
            "ap_frequency": dict(sorted(self.ap_frequency.items())),
            "ap_standard_error": dict(sorted(self.ap_se.items())),
        }


class _Sampler:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.cache: dict[int, tuple[list, list[float]]] = {}

    def draw(self, dist: Mapping[Any, Fraction]):
        key = id(dist)
        if key not in self.cache:
            items = sorted(((k, v) for k, v in dist.items() if v), key=lambda kv: repr(kv[0]))
            cum, acc = [], Fraction(0)
            for _, v in items:
                acc += v
                cum.append(float(acc))
            cum[-1] = 1.0
            self.cache[key] = ([k for k, _ in items], cum)
        keys, cum = self.cache[key]
        return keys[bisect.bisect_right(cum, self.rng.random())] if len(keys) > 1 else keys[0]


def simulate(p: ProductMdp | Mdp, pol: Policy, steps: int, seed: int, batches: int = 50) -> SimulationResult:
    """Sample one trajectory of ``steps`` actions; frequencies with batch-means standard errors."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    m = p.mdp if isinstance(p, ProductMdp) else p
    rng = random.Random(seed)
    sampler = _Sampler(rng)
    s = m.initial
    mem = sampler.draw(pol.alpha)
    batches = max(1, min(batches, steps))
    size = steps // batches
    act_counts: dict[int, int] = {}
    ap_counts: dict[str, int] = {p: 0 for p in m.ap}
    act_batches: list[dict[int, int]] = [dict() for _ in range(batches)]
    ap_batches: list[dict[str, int]] = [dict() for _ in range(batches)]
    for t in range(steps):
        a = sampler.draw(pol.sigma_n[(s, mem)])
        act_counts[a] = act_counts.get(a, 0) + 1
        b = min(t // size, batches - 1)
        act_batches[b][a] = act_batches[b].get(a, 0) + 1
        for ap in m.labels[s]:
            ap_counts[ap] += 1
            ap_batches[b][ap] = ap_batches[b].get(ap, 0) + 1
        nxt = sampler.draw(m.actions[a].dist)
        mem = sampler.draw(pol.sigma_u[(a, nxt, mem)])
        s = nxt

    lengths = [size] * (batches - 1) + [steps - size * (batches - 1)]

    def se(series: list[dict], key) -> float:
        if batches < 2:
            return math.inf
        means = [bt.get(key, 0) / ln for bt, ln in zip(series, lengths)]
        mu = sum(means) / batches
        var = sum((x - mu) ** 2 for x in means) / (batches - 1)
        return math.sqrt(var / batches)

    return SimulationResult(
        steps=steps,
        seed=seed,
        action_frequency={a: c / steps for a, c in sorted(act_counts.items())},
        ap_frequency={ap: c / steps for ap, c in sorted(ap_counts.items())},
        action_se={a: se(act_batches, a) for a in sorted(act_counts)},
        ap_se={ap: se(ap_batches, ap) for ap in sorted(ap_counts)},
    )
