"""Exact optimal transport on finite metric spaces.

Costs and masses are rationals.  They are scaled to integers, and the
transport problem is solved as a min-cost flow by successive shortest paths
(Dijkstra with node potentials).  Optimality is then certified independently:
dual potentials are recomputed by Bellman-Ford on the final residual graph
and checked for feasibility and complementary slackness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, PreconditionError
from .finite_metric import FiniteMetric, quotient_metric
from .groups import FiniteGroup, is_right_invariant
from .serialize import fraction_str, parse_rational

MAX_SUPPORT = 256
INF = math.inf


@dataclass(frozen=True)
class DiscreteMeasure:
    n: int
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        w = tuple(parse_rational(v) for v in self.weights)
        if len(w) != self.n:
            raise ValueError("one weight per base point is required")
        if any(v < 0 for v in w):
            raise ValueError("weights must be nonnegative")
        if sum(w) != 1:
            raise ValueError("weights must sum to one")
        object.__setattr__(self, "weights", w)

    @property
    def support(self) -> list[int]:
        return [i for i, v in enumerate(self.weights) if v != 0]

    @classmethod
    def point(cls, n: int, x: int) -> "DiscreteMeasure":
        return cls(n, tuple(Fraction(int(i == x)) for i in range(n)))

    @classmethod
    def uniform_on(cls, n: int, A: Sequence[int]) -> "DiscreteMeasure":
        A = set(int(a) for a in A)
        if not A:
            raise PreconditionError("uniform measure needs a nonempty set")
        return cls(n, tuple(Fraction(1, len(A)) if i in A else Fraction(0) for i in range(n)))

    def to_dict(self) -> dict:
        return {"weights": [fraction_str(v) for v in self.weights]}

    @classmethod
    def from_dict(cls, obj: dict, n: int | None = None) -> "DiscreteMeasure":
        w = [parse_rational(v) for v in obj["weights"]]
        return cls(len(w) if n is None else n, tuple(w))


@dataclass(frozen=True)
class Coupling:
    n: int
    entries: tuple[tuple[int, int, Fraction], ...]  # sparse nonzero (i, j, mass)

    def marginals(self) -> tuple[list[Fraction], list[Fraction]]:
        rows = [Fraction(0)] * self.n
        cols = [Fraction(0)] * self.n
        for i, j, v in self.entries:
            rows[i] += v
            cols[j] += v
        return rows, cols

    def cost(self, X: FiniteMetric) -> Fraction:
        M = X.exact_matrix()
        return sum((M[i][j] * v for i, j, v in self.entries), Fraction(0))

    def is_valid(self, sigma: DiscreteMeasure, tau: DiscreteMeasure) -> bool:
        rows, cols = self.marginals()
        return (all(v >= 0 for _, _, v in self.entries)
                and tuple(rows) == sigma.weights and tuple(cols) == tau.weights)

    def to_dict(self) -> list:
        return [{"i": i, "j": j, "mass": fraction_str(v)} for i, j, v in self.entries]


def _lcm_den(values) -> int:
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return den


def min_cost_transport(cost: list[list[int]], supply: list[int], demand: list[int]):
    """Integer transportation problem by successive shortest augmenting paths.

    Returns the integral flow matrix (Python ints).  ``sum(supply)`` must
    equal ``sum(demand)``; arcs between every source and sink are uncapacitated.
    """
    ns, nt = len(supply), len(demand)
    if sum(supply) != sum(demand):
        raise ValueError("supply and demand totals differ")
    c = np.array(cost, dtype=object).reshape(ns, nt)
    flow = np.zeros((ns, nt), dtype=object)
    sup = list(supply)
    dem = list(demand)
    phi_s = np.zeros(ns, dtype=object)
    phi_t = np.zeros(nt, dtype=object)
    phi_root = 0
    phi_sink = 0
    while any(s > 0 for s in sup):
        # Dijkstra over reduced costs; node ids: sources 0..ns-1, sinks ns..ns+nt-1
        dist_s = np.array([phi_root - phi_s[i] if sup[i] > 0 else INF for i in range(ns)], dtype=object)
        dist_t = np.full(nt, INF, dtype=object)
        prev_s = [-1] * ns  # sink index we reached source i from (-1: from root)
        prev_t = [-1] * nt  # source index we reached sink j from
        done_s = np.zeros(ns, dtype=bool)
        done_t = np.zeros(nt, dtype=bool)
        best_sink = None
        best_total = INF
        while True:
            cand_s = [(dist_s[i], 0, i) for i in range(ns) if not done_s[i] and dist_s[i] != INF]
            cand_t = [(dist_t[j], 1, j) for j in range(nt) if not done_t[j] and dist_t[j] != INF]
            if not cand_s and not cand_t:
                break
            dv, kind, v = min(cand_s + cand_t)
            if dv >= best_total:
                break
            if kind == 0:
                done_s[v] = True
                red = c[v] + phi_s[v] - phi_t
                for j in range(nt):
                    nd = dv + red[j]
                    if not done_t[j] and nd < dist_t[j]:
                        dist_t[j] = nd
                        prev_t[j] = v
            else:
                done_t[v] = True
                if dem[v] > 0:
                    tot = dv + phi_t[v] - phi_sink
                    if tot < best_total:
                        best_total = tot
                        best_sink = v
                col = flow[:, v]
                for i in range(ns):
                    if col[i] > 0 and not done_s[i]:
                        nd = dv - c[i, v] + phi_t[v] - phi_s[i]
                        if nd < dist_s[i]:
                            dist_s[i] = nd
                            prev_s[i] = v
        if best_sink is None:
            raise ArithmeticError("no augmenting path although supply remains")
        # trace the path back to the root
        path = []
        j = best_sink
        while True:
            i = prev_t[j]
            path.append((i, j))
            if prev_s[i] == -1:
                break
            j = prev_s[i]
        start = path[-1][0]
        amount = min(sup[start], dem[best_sink])
        for k in range(len(path) - 1):
            # reverse arc (sink path[k+1][1]... ) carries flow back from source path[k][0]
            i = path[k][0]
            jj = prev_s[i]
            amount = min(amount, flow[i, jj])
        for k, (i, j) in enumerate(path):
            flow[i, j] += amount
            if k < len(path) - 1:
                flow[i, prev_s[i]] -= amount
        sup[start] -= amount
        dem[best_sink] -= amount
        # potentials: shift every reached node by its distance, capped at the path length
        cap = best_total
        for i in range(ns):
            if dist_s[i] != INF:
                phi_s[i] += min(dist_s[i], cap)
            else:
                phi_s[i] += cap
        for j in range(nt):
            if dist_t[j] != INF:
                phi_t[j] += min(dist_t[j], cap)
            else:
                phi_t[j] += cap
        phi_sink += cap
    return flow


def transport_duals(cost: list[list[int]], flow) -> tuple[list, list]:
    """Bellman-Ford potentials on the residual graph of an optimal flow.

    Returns (u, v) with u_i + v_j <= c_ij everywhere and equality where the
    flow is positive.  Raises if a negative residual cycle exists, which would
    mean the flow is not optimal.
    """
    c = np.array(cost, dtype=object)
    ns, nt = c.shape
    ps = [0] * ns
    pt = [0] * nt
    for _ in range(ns + nt + 1):
        changed = False
        for j in range(nt):
            m = min(ps[i] + c[i, j] for i in range(ns))
            if m < pt[j]:
                pt[j] = m
                changed = True
        for i in range(ns):
            for j in range(nt):
                if flow[i, j] > 0 and pt[j] - c[i, j] < ps[i]:
                    ps[i] = pt[j] - c[i, j]
                    changed = True
        if not changed:
            return [-p for p in ps], pt
    raise ArithmeticError("negative residual cycle: flow is not optimal")


def emd(X: FiniteMetric, sigma: DiscreteMeasure, tau: DiscreteMeasure) -> dict:
    """Optimal transportation cost with an exact coupling and dual certificate."""
    if sigma.n != X.n or tau.n != X.n:
        raise PreconditionError("measures must live on the given space")
    S, T = sigma.support, tau.support
    if max(len(S), len(T)) > MAX_SUPPORT:
        raise CapacityError(f"supports are limited to {MAX_SUPPORT} points")
    M = X.exact_matrix()
    sub = [[M[i][j] for j in T] for i in S]
    cden = _lcm_den(v for row in sub for v in row)
    mden = _lcm_den([sigma.weights[i] for i in S] + [tau.weights[j] for j in T])
    icost = [[int(v * cden) for v in row] for row in sub]
    supply = [int(sigma.weights[i] * mden) for i in S]
    demand = [int(tau.weights[j] * mden) for j in T]
    flow = min_cost_transport(icost, supply, demand)
    u, v = transport_duals(icost, flow)
    primal = sum(icost[a][b] * flow[a, b] for a in range(len(S)) for b in range(len(T)))
    dual = sum(u[a] * supply[a] for a in range(len(S))) + sum(v[b] * demand[b] for b in range(len(T)))
    if primal != dual:
        raise ArithmeticError("duality gap: transport solution is not optimal")
    entries = tuple((S[a], T[b], Fraction(int(flow[a, b]), mden))
                    for a in range(len(S)) for b in range(len(T)) if flow[a, b] != 0)
    coupling = Coupling(X.n, entries)
    cost = Fraction(int(primal), cden * mden)
    return {
        "cost": cost,
        "coupling": coupling,
        "u": {S[a]: Fraction(int(u[a]), cden) for a in range(len(S))},
        "v": {T[b]: Fraction(int(v[b]), cden) for b in range(len(T))},
    }


def emd_uniform_sets(X: FiniteMetric, A: Sequence[int], B: Sequence[int]) -> dict:
    """Best bijection A -> B, solved as an assignment problem.

    The assignment is found on floats and its cost recomputed exactly; it is
    then required to match the flow-based transport cost exactly.
    """
    A, B = list(A), list(B)
    if len(A) != len(B):
        raise PreconditionError("sets must have the same size")
    if not A:
        raise PreconditionError("sets must be nonempty")
    rows, cols = linear_sum_assignment(X.dist[np.ix_(A, B)])
    M = X.exact_matrix()
    bij = {A[r]: B[c] for r, c in zip(rows, cols)}
    cost = sum((M[a][b] for a, b in bij.items()), Fraction(0)) / len(A)
    ref = emd(X, DiscreteMeasure.uniform_on(X.n, A), DiscreteMeasure.uniform_on(X.n, B))["cost"]
    if cost != ref:
        raise ArithmeticError("assignment cost differs from transport cost")
    return {"cost": cost, "bijection": bij}


def group_metric(G: FiniteGroup, dist) -> FiniteMetric:
    from .finite_metric import from_matrix

    return from_matrix(np.asarray(dist).tolist(), [str(e) for e in G.elements])


def verify_group_invariant(G: FiniteGroup, X: FiniteMetric, H: Sequence[int],
                           gens: Sequence[int] | None = None) -> dict:
    """Transport between uniform coset measures equals the quotient distance."""
    if not is_right_invariant(G, X.dist, gens):
        raise PreconditionError("metric is not invariant under right multiplication")
    cosets = G.left_cosets(H)
    Q = quotient_metric(X, cosets).quotient.exact_matrix()
    mismatches = []
    pairs = 0
    for a in range(len(cosets)):
        for b in range(len(cosets)):
            t = emd(X, DiscreteMeasure.uniform_on(X.n, cosets[a]),
                    DiscreteMeasure.uniform_on(X.n, cosets[b]))["cost"]
            pairs += 1
            if t != Q[a][b]:
                mismatches.append((a, b, t, Q[a][b]))
    return {"holds": not mismatches, "pairs": pairs, "mismatches": mismatches,
            "cosets": len(cosets)}


def transport_embedding(C) -> dict:
    """Map each coset of C-perp to its uniform measure and check isometry.

    The image lives in the space of probability measures on F_2^d with the
    Hamming transport cost, so any c1 lower bound for the coset quotient
    transfers to that space.
    """
    from .cube_quotients import coset_quotient, dual_code, span, syndrome
    from .finite_metric import hamming_cube

    if C.d > 6:
        raise CapacityError("exhaustive embedding check is limited to d <= 6")
    X = hamming_cube(C.d)
    Hperp = np.sort(span(dual_code(C).gens))
    s = syndrome(C, np.arange(1 << C.d))
    k = 1 << C.dim
    cosets = [np.flatnonzero(s == i).tolist() for i in range(k)]
    measures = [DiscreteMeasure.uniform_on(X.n, co) for co in cosets]
    Q = coset_quotient(C).exact_matrix()
    worst = Fraction(0)
    for a in range(k):
        for b in range(a + 1, k):
            t = emd(X, measures[a], measures[b])["cost"]
            worst = max(worst, abs(t - Q[a][b]))
    return {"measures": measures, "subgroup": Hperp.tolist(), "isometric": worst == 0}
