"""Exact two-phase primal simplex over the rationals with Bland's pivoting rule.

Problems are given as ``maximize c.x`` subject to rows
``lower <= sum_j a_ij x_j <= upper`` (either bound may be ``None``) and
``x >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_ZERO = Fraction(0)


@dataclass
class SimplexResult:
    status: str
    values: list[Fraction] | None
    objective: Fraction | None
    pivots: int


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, j: int, cost: list[Fraction]) -> Fraction:
        """Pivot column ``j`` into row ``r``; updates ``cost`` (reduced costs) in place.

        Returns the change to apply to the objective value.
        """
        self.pivots += 1
        row = self.rows[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in range(len(row)):
                if row[k]:
                    row[k] *= inv
            self.rhs[r] *= inv
        nz = [k for k in range(len(row)) if row[k]]
        b = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
                self.rhs[i] -= f * b
        f = cost[j]
        if f:
            for k in nz:
                cost[k] -= f * row[k]
        self.basis[r] = j
        return f * b

    def run(self, cost: list[Fraction], allowed: int) -> str:
        """Maximise; ``cost`` holds reduced costs, columns ``>= allowed`` never enter."""
        while True:
            entering = next((j for j in range(allowed) if cost[j] > 0), None)
            if entering is None:
                return OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return UNBOUNDED
            self.pivot(best[1], entering, cost)


def solve(
    n: int,
    rows: Sequence[tuple[Mapping[int, Fraction], Fraction | None, Fraction | None]],
    objective: Mapping[int, Fraction] | None = None,
) -> SimplexResult:
    """Solve over ``n`` nonnegative variables; feasibility only when ``objective`` is None."""
    eq_rows: list[tuple[dict[int, Fraction], Fraction]] = []
    n_slack = 0
    for coeffs, lo, hi in rows:
        coeffs = {j: Fraction(c) for j, c in coeffs.items() if c}
        if lo is not None and hi is not None and lo == hi:
            eq_rows.append((coeffs, Fraction(lo)))
            continue
        if hi is not None:
            eq_rows.append(({**coeffs, n + n_slack: Fraction(1)}, Fraction(hi)))
            n_slack += 1
        if lo is not None:
            eq_rows.append(({**coeffs, n + n_slack: Fraction(-1)}, Fraction(lo)))
            n_slack += 1

    m = len(eq_rows)
    width = n + n_slack + m
    art0 = n + n_slack
    table: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for i, (coeffs, b) in enumerate(eq_rows):
        sign = -1 if b < 0 else 1
        row = [_ZERO] * width
        for j, c in coeffs.items():
            row[j] = sign * c
        row[art0 + i] = Fraction(1)
        table.append(row)
        rhs.append(sign * b)
    tab = _Tableau(table, rhs, [art0 + i for i in range(m)])

    # phase 1: maximise -sum(artificials)
    cost = [_ZERO] * width
    for row in table:
        for j in range(art0):
            if row[j]:
                cost[j] += row[j]
    tab.run(cost, art0)
    if any(tab.rhs[i] != 0 for i in range(m) if tab.basis[i] >= art0):
        return SimplexResult(INFEASIBLE, None, None, tab.pivots)

    # drive remaining (zero-valued) artificials out of the basis, dropping redundant rows
    i = 0
    while i < len(tab.rows):
        if tab.basis[i] >= art0:
            j = next((j for j in range(art0) if tab.rows[i][j]), None)
            if j is None:
                del tab.rows[i], tab.rhs[i], tab.basis[i]
                continue
            tab.pivot(i, j, [_ZERO] * width)
        i += 1

    if objective is None:
        return SimplexResult(FEASIBLE, _extract(tab, n), None, tab.pivots)

    c = [_ZERO] * width
    for j, v in objective.items():
        c[j] = Fraction(v)
    cost = c[:]
    for i, b in enumerate(tab.basis):
        cb = c[b]
        if cb:
            row = tab.rows[i]
            for k in range(width):
                if row[k]:
                    cost[k] -= cb * row[k]
    status = tab.run(cost, art0)
    if status == UNBOUNDED:
        return SimplexResult(UNBOUNDED, None, None, tab.pivots)
    values = _extract(tab, n)
    return SimplexResult(OPTIMAL, values, sum((c[j] * values[j] for j in range(n)), _ZERO), tab.pivots)


def _extract(tab: _Tableau, n: int) -> list[Fraction]:
    values = [_ZERO] * n
    for i, b in enumerate(tab.basis):
        if b < n:
            values[b] = tab.rhs[i]
    return values
