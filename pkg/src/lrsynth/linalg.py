"""Exact sparse Gaussian elimination over the rationals."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class SingularSystem(ValueError):
    pass


def solve(rows: Sequence[dict[int, Fraction]], rhs: Sequence[Sequence[Fraction]], n: int) -> list[list[Fraction]]:
    """Solve ``A X = B`` for square ``A`` given as sparse rows.

    ``rhs[i]`` is row ``i`` of ``B`` (one entry per right-hand side); returns
    ``X`` as a list of rows in the same layout.
    """
    if len(rows) != n:
        raise ValueError("system must be square")
    a = [dict((j, Fraction(v)) for j, v in r.items() if v) for r in rows]
    b = [[Fraction(v) for v in r] for r in rhs]
    k = len(b[0]) if b else 0
    pivot_row_of: dict[int, int] = {}
    used = [False] * n
    for col in range(n):
        # sparsest available row with a nonzero in this column limits fill-in
        best = None
        for i in range(n):
            if not used[i] and col in a[i]:
                if best is None or len(a[i]) < len(a[best]):
                    best = i
        if best is None:
            raise SingularSystem(f"matrix is singular (column {col})")
        used[best] = True
        pivot_row_of[col] = best
        prow = a[best]
        inv = 1 / prow[col]
        for j in prow:
            prow[j] *= inv
        b[best] = [v * inv for v in b[best]]
        for i in range(n):
            if i == best or col not in a[i]:
                continue
            f = a[i][col]
            row = a[i]
            for j, v in prow.items():
                nv = row.get(j, 0) - f * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
            bi, bp = b[i], b[best]
            for t in range(k):
                if bp[t]:
                    bi[t] -= f * bp[t]
    return [b[pivot_row_of[col]] for col in range(n)]


def solve_vector(rows: Sequence[dict[int, Fraction]], rhs: Sequence[Fraction], n: int) -> list[Fraction]:
    return [r[0] for r in solve(rows, [[v] for v in rhs], n)]
