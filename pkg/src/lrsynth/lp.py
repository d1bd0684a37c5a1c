"""The policy-flow linear program over a product MDP, plus specification constraints.

Variables (all nonnegative), for every product action ``a`` and state ``s``:

* ``y_a``  expected number of times ``a`` is played before switching to
  recurrent behaviour,
* ``y_s``  probability of switching to recurrent behaviour upon reaching ``s``,
* ``x_a``  long-run frequency of ``a``.

Every constraint carries a tag naming the group it belongs to:

``transient``   flow conservation before the switch, one per state
``switch``      switching happens almost surely (inside MECs)
``mec``         switching mass of a MEC equals its recurrent frequency
``recurrent``   flow conservation of frequencies, one per state
``ltl``         frequency outside accepting MECs is at most ``1 - theta``
``sss``         steady-state interval for one proposition
``reward``      long-run average reward threshold, one per dimension
``freq``        accepting states are visited at least once per ``f`` steps
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import simplex
from .mdp import format_rational
from .mec import Mec
from .product import ProductMdp

FEASIBILITY = "feasibility"
MAX_REWARD = "max-reward"
MAX_LTL = "max-ltl-prob"


@dataclass(frozen=True)
class Objective:
    kind: str = FEASIBILITY
    weights: tuple[Fraction, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Objective":
        """``feasibility``, ``max-ltl-prob``, ``max-reward`` or ``max-reward:w1,w2,...``."""
        kind, _, rest = text.partition(":")
        if kind in (FEASIBILITY, MAX_LTL) and not rest:
            return cls(kind)
        if kind == MAX_REWARD:
            weights = tuple(Fraction(w) for w in rest.split(",")) if rest else ()
            return cls(MAX_REWARD, weights)
        raise ValueError(f"unknown objective {text!r}")


@dataclass(frozen=True)
class SteadyState:
    ap: str
    lower: Fraction
    upper: Fraction


@dataclass(frozen=True)
class LongRunSpec:
    """LTL threshold, steady-state intervals, reward thresholds and an objective.

    The LTL part itself lives in the automaton used to build the product; only
    ``theta`` enters the LP. ``ltl`` is a display string for reports.
    """

    theta: Fraction = Fraction(0)
    sss: tuple[SteadyState, ...] = ()
    reward_thresholds: tuple[Fraction, ...] = ()
    objective: Objective = field(default_factory=Objective)
    freq_bound: Fraction | None = None
    per_mec: bool = False
    ltl: str | None = None

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise ValueError(f"theta must lie in [0,1], got {self.theta}")
        for c in self.sss:
            if not (0 <= c.lower <= 1 and 0 <= c.upper <= 1):
                raise ValueError(f"steady-state bounds for {c.ap!r} must lie in [0,1]")
            if c.lower > c.upper:
                raise ValueError(f"steady-state interval for {c.ap!r} is empty")
        if self.freq_bound is not None and self.freq_bound <= 0:
            raise ValueError("frequency bound must be positive")


@dataclass(frozen=True)
class Constraint:
    tag: str
    coeffs: dict[int, Fraction]
    lower: Fraction | None
    upper: Fraction | None
    label: str = ""


@dataclass
class LpProblem:
    variables: list[str]
    constraints: list[Constraint]
    objective: dict[int, Fraction] | None
    ya: dict[int, int]
    ys: dict[int, int]
    x: dict[int, int]

    def count(self, tag: str) -> int:
        return sum(1 for c in self.constraints if c.tag == tag)

    def dump(self) -> str:
        """Human-readable listing of the LP with exact coefficients."""
        def term(j: int, c: Fraction) -> str:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            return f"{sign} {'' if mag == 1 else format_rational(mag) + ' '}{self.variables[j]}"

        lines = []
        if self.objective is None:
            lines.append("feasibility")
        else:
            body = " ".join(term(j, c) for j, c in sorted(self.objective.items()) if c) or "0"
            lines.append(f"maximize {body}")
        lines.append("subject to")
        for c in self.constraints:
            body = " ".join(term(j, v) for j, v in sorted(c.coeffs.items()) if v) or "0"
            if c.lower is not None and c.lower == c.upper:
                rel = f"= {format_rational(c.lower)}"
            else:
                rel = " ".join(filter(None, [
                    f">= {format_rational(c.lower)}" if c.lower is not None else "",
                    f"<= {format_rational(c.upper)}" if c.upper is not None else "",
                ]))
            label = f" {c.label}" if c.label else ""
            lines.append(f"  [{c.tag}{label}] {body} {rel}")
        lines.append(f"bounds all {len(self.variables)} variables >= 0")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str
    values: list[Fraction] | None
    objective: Fraction | None
    problem: LpProblem

    @property
    def feasible(self) -> bool:
        return self.status in (simplex.OPTIMAL, simplex.FEASIBLE)

    def x(self, a: int) -> Fraction:
        return self.values[self.problem.x[a]]

    def ya(self, a: int) -> Fraction:
        return self.values[self.problem.ya[a]]

    def ys(self, s: int) -> Fraction:
        return self.values[self.problem.ys[s]]

    def satisfies_all(self) -> bool:
        """Re-evaluate every constraint exactly."""
        if self.values is None or any(v < 0 for v in self.values):
            return False
        for c in self.problem.constraints:
            lhs = sum((v * self.values[j] for j, v in c.coeffs.items()), Fraction(0))
            if c.lower is not None and lhs < c.lower:
                return False
            if c.upper is not None and lhs > c.upper:
                return False
        return True


def _add(coeffs: dict[int, Fraction], j: int, v: Fraction) -> None:
    coeffs[j] = coeffs.get(j, Fraction(0)) + v


def build_lp(p: ProductMdp, mecs: Sequence[Mec], amecs: Sequence[Mec], spec: LongRunSpec) -> LpProblem:
    m = p.mdp
    known = set().union(*m.labels) | set(m.ap)
    for c in spec.sss:
        if c.ap not in known:
            raise ValueError(f"steady-state constraint refers to unknown proposition {c.ap!r}")
    if len(spec.reward_thresholds) > m.reward_dim:
        raise ValueError(f"{len(spec.reward_thresholds)} reward thresholds given but rewards have dimension {m.reward_dim}")

    variables: list[str] = []
    ya, ys, xv = {}, {}, {}
    for a, act in enumerate(m.actions):
        ya[a] = len(variables)
        variables.append(f"ya[{act.name}]")
    for s, name in enumerate(m.states):
        ys[s] = len(variables)
        variables.append(f"ys[{name}]")
    for a, act in enumerate(m.actions):
        xv[a] = len(variables)
        variables.append(f"x[{act.name}]")

    cons: list[Constraint] = []
    one, zero = Fraction(1), Fraction(0)

    for s in range(m.num_states):
        coeffs: dict[int, Fraction] = {}
        for a in m.enabled[s]:
            _add(coeffs, ya[a], one)
        _add(coeffs, ys[s], one)
        for a, act in enumerate(m.actions):
            if s in act.dist:
                _add(coeffs, ya[a], -act.dist[s])
        rhs = one if s == m.initial else zero
        cons.append(Constraint("transient", coeffs, rhs, rhs, m.states[s]))

    in_mec = sorted(s for c in mecs for s in c.states)
    cons.append(Constraint("switch", {ys[s]: one for s in in_mec}, one, one))

    for c in mecs:
        coeffs = {ys[s]: one for s in c.states}
        for a in c.actions:
            _add(coeffs, xv[a], -one)
        cons.append(Constraint("mec", coeffs, zero, zero, "{" + ",".join(m.states[s] for s in sorted(c.states)) + "}"))

    for s in range(m.num_states):
        coeffs = {}
        for a in m.enabled[s]:
            _add(coeffs, xv[a], one)
        for a, act in enumerate(m.actions):
            if s in act.dist:
                _add(coeffs, xv[a], -act.dist[s])
        cons.append(Constraint("recurrent", coeffs, zero, zero, m.states[s]))

    amec_actions = set().union(*(c.actions for c in amecs)) if amecs else set()
    outside = [a for a in range(m.num_actions) if a not in amec_actions]
    if spec.theta == 1:
        for a in outside:
            cons.append(Constraint("ltl", {xv[a]: one}, zero, zero, m.actions[a].name))
    elif spec.theta > 0:
        cons.append(Constraint("ltl", {xv[a]: one for a in outside}, None, 1 - spec.theta))

    for c in spec.sss:
        coeffs = {xv[a]: one for s in range(m.num_states) if c.ap in m.labels[s] for a in m.enabled[s]}
        cons.append(Constraint("sss", coeffs, c.lower, c.upper, c.ap))

    for i, bound in enumerate(spec.reward_thresholds):
        coeffs = {xv[a]: act.reward[i] for a, act in enumerate(m.actions) if act.reward[i]}
        cons.append(Constraint("reward", coeffs, bound, None, f"dim{i}"))

    if spec.freq_bound is not None:
        inv = 1 / spec.freq_bound
        acc_actions = {a for s in p.accepting for a in m.enabled[s]}
        if spec.per_mec:
            for c in amecs:
                coeffs = {xv[a]: (one if a in acc_actions else zero) - inv for a in c.actions}
                cons.append(Constraint("freq", coeffs, zero, None,
                                       "{" + ",".join(m.states[s] for s in sorted(c.states)) + "}"))
        else:
            coeffs = {xv[a]: one for a in sorted(acc_actions & amec_actions)}
            cons.append(Constraint("freq", coeffs, inv, None))

    objective = None
    if spec.objective.kind == MAX_REWARD:
        # default: the first reward dimension
        weights = spec.objective.weights or tuple(one if i == 0 else zero for i in range(m.reward_dim))
        if not weights or len(weights) != m.reward_dim:
            raise ValueError(f"reward weights {weights} do not match reward dimension {m.reward_dim}")
        objective = {}
        for a, act in enumerate(m.actions):
            v = sum((w * r for w, r in zip(weights, act.reward)), zero)
            if v:
                objective[xv[a]] = v
    elif spec.objective.kind == MAX_LTL:
        objective = {xv[a]: one for a in sorted(amec_actions)}

    return LpProblem(variables, cons, objective, ya, ys, xv)


def solve_lp(lp: LpProblem) -> LpSolution:
    rows = [(c.coeffs, c.lower, c.upper) for c in lp.constraints]
    res = simplex.solve(len(lp.variables), rows, lp.objective)
    return LpSolution(res.status, res.values, res.objective, lp)
