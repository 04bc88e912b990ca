"""Exact primal simplex over the rationals.

Solves ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0`` so the slack basis
is feasible from the start.  The tableau is kept as Python integers with a
common denominator (Edmonds / Bareiss integer pivoting), which keeps every
entry exact without the cost of reducing Fractions after each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import UnboundedError


@dataclass
class LPResult:
    value: Fraction
    x: list[Fraction]
    duals: list[Fraction]
    pivots: int


def _row_scale(row, rhs) -> tuple[list[int], int, int]:
    fr = [Fraction(v) for v in row] + [Fraction(rhs)]
    den = 1
    for v in fr:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in fr]
    return ints[:-1], ints[-1], den


def maximize(c, A, b, *, dantzig_streak: int = 50) -> LPResult:
    """Maximize ``c.x`` subject to ``A x <= b`` and ``x >= 0``.

    Entering columns are picked by the most negative reduced cost; after
    ``dantzig_streak`` consecutive degenerate pivots the rule switches to
    Bland's smallest-index rule, which cannot cycle, until progress resumes.
    """
    A = [list(r) for r in A]
    m = len(A)
    nvar = len(c)
    if any(Fraction(v) < 0 for v in b):
        raise ValueError("right-hand side must be nonnegative")
    ncol = nvar + m + 1
    T = np.empty((m + 1, ncol), dtype=object)
    row_den = []
    for i in range(m):
        row, rhs, den = _row_scale(A[i], b[i])
        row_den.append(den)
        T[i, :nvar] = row
        T[i, nvar:nvar + m] = 0
        T[i, nvar + i] = 1
        T[i, -1] = rhs
    crow, _, obj_scale = _row_scale([-Fraction(v) for v in c], 0)
    T[m, :nvar] = crow
    T[m, nvar:] = 0
    basis = list(range(nvar, nvar + m))
    D = 1
    pivots = 0
    degenerate = 0
    while True:
        obj = T[m, :-1]
        neg = [j for j in range(ncol - 1) if obj[j] < 0]
        if not neg:
            break
        if degenerate < dantzig_streak:
            col = min(neg, key=lambda j: (obj[j], j))
        else:
            col = neg[0]
        column = T[:m, col]
        best = None
        for i in range(m):
            a = column[i]
            if a > 0:
                if best is None:
                    best = i
                    continue
                lhs = T[i, -1] * column[best]
                rhs = T[best, -1] * a
                if lhs < rhs or (lhs == rhs and basis[i] < basis[best]):
                    best = i
        if best is None:
            raise UnboundedError("objective is unbounded")
        r = best
        p = T[r, col]
        degenerate = degenerate + 1 if T[r, -1] == 0 else 0
        pr = T[r].copy()
        T = (T * p - np.outer(T[:, col], pr)) // D
        T[r] = pr
        D = p
        basis[r] = col
        pivots += 1
    x = [Fraction(0)] * (nvar + m)
    for i, j in enumerate(basis):
        x[j] = Fraction(int(T[i, -1]), int(D))
    value = Fraction(int(T[m, -1]), int(D) * obj_scale)
    duals = [Fraction(int(T[m, nvar + i]) * row_den[i], int(D) * obj_scale) for i in range(m)]
    return LPResult(value, x[:nvar], duals, pivots)
