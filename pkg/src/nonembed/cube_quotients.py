"""Group actions on the cube, linear codes, orbit quotients and c1 bounds.

Coordinate permutations are encoded as lists ``perm`` meaning bit ``i`` of
``x`` moves to bit ``perm[i]``.  The cyclic shift that sends
``(x_1, ..., x_d)`` to ``(x_d, x_1, ..., x_{d-1})`` is ``perm[i] = i + 1 mod d``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import fourier_cube as fc
from .errors import CapacityError, PreconditionError
from .finite_metric import FiniteMetric, from_matrix
from .tolerances import IDENTITY_TOL, MAX_EXACT_INTEGRAL_DIM

MAX_GROUP_ORDER = 10**6


# ---------------------------------------------------------------- F_2 algebra

def rref(vectors: Sequence[int]) -> tuple[list[int], list[int]]:
    """Reduced row echelon form of bitmask vectors.

    Returns the nonzero rows and their pivot bits (highest set bit of each row).
    """
    rows: list[int] = []
    pivots: list[int] = []
    for v in vectors:
        v = int(v)
        for r, p in zip(rows, pivots):
            if v >> p & 1:
                v ^= r
        if v:
            p = v.bit_length() - 1
            for i in range(len(rows)):
                if rows[i] >> p & 1:
                    rows[i] ^= v
            rows.append(v)
            pivots.append(p)
    order = sorted(range(len(rows)), key=lambda i: -pivots[i])
    return [rows[i] for i in order], [pivots[i] for i in order]


def rank(vectors: Sequence[int]) -> int:
    return len(rref(vectors)[0])


def span(gens: Sequence[int]) -> np.ndarray:
    words = np.zeros(1, dtype=np.int64)
    for g in gens:
        words = np.concatenate([words, words ^ int(g)])
    return words


def dot(x: int, y: int) -> int:
    return (int(x) & int(y)).bit_count() & 1


# ---------------------------------------------------------------- codes

@dataclass(frozen=True)
class LinearCode:
    d: int
    gens: tuple[int, ...]
    dim: int = field(init=False)
    min_weight: int = field(init=False)

    def __post_init__(self):
        gens = tuple(int(g) for g in self.gens)
        if any(g < 0 or g >> self.d for g in gens):
            raise ValueError("generator does not fit in d bits")
        if rank(gens) != len(gens):
            raise ValueError("generators are linearly dependent")
        object.__setattr__(self, "gens", gens)
        object.__setattr__(self, "dim", len(gens))
        if len(gens) > 24:
            raise CapacityError("minimum weight enumeration is capped at dimension 24")
        words = span(gens)[1:]
        w = int(np.bitwise_count(words.astype(np.uint64)).min()) if len(words) else 0
        object.__setattr__(self, "min_weight", w)

    @classmethod
    def spanned_by(cls, d: int, vectors: Sequence[int]) -> "LinearCode":
        return cls(d, tuple(rref(vectors)[0]))

    def codewords(self) -> np.ndarray:
        return np.sort(span(self.gens))

    def contains(self, x: int) -> bool:
        return rank(list(self.gens) + [int(x)]) == self.dim

    def to_dict(self) -> dict:
        return {"d": self.d, "gens": list(self.gens)}

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearCode":
        return cls.spanned_by(int(obj["d"]), [int(g) for g in obj["gens"]])


def dual_code(C: LinearCode) -> LinearCode:
    """Basis of the orthogonal complement via reduced row echelon form."""
    rows, pivots = rref(C.gens)
    pivot_set = set(pivots)
    basis = []
    for f in range(C.d):
        if f in pivot_set:
            continue
        v = 1 << f
        for r, p in zip(rows, pivots):
            if r >> f & 1:
                v |= 1 << p
        basis.append(v)
    D = LinearCode.spanned_by(C.d, basis)
    assert D.dim == C.d - C.dim
    return D


def distance_to_code(d: int, codewords: np.ndarray, radius: int | None = None) -> np.ndarray:
    """Hamming distance from every point of the cube to a set, by layered BFS."""
    if d > MAX_EXACT_INTEGRAL_DIM:
        raise CapacityError("cube enumeration is capped")
    n = 1 << d
    big = d + 1
    dist = np.full(n, big, dtype=np.int64)
    dist[codewords] = 0
    frontier = np.zeros(n, dtype=bool)
    frontier[codewords] = True
    x = np.arange(n)
    level = 0
    while frontier.any() and (radius is None or level < radius):
        level += 1
        nb = np.zeros(n, dtype=bool)
        idx = np.flatnonzero(frontier)
        for j in range(d):
            nb[idx ^ (1 << j)] = True
        new = nb & (dist == big)
        dist[new] = level
        frontier = new
    return dist


def binomial_tail(d: int, r: int) -> int:
    return sum(math.comb(d, k) for k in range(0, min(r, d) + 1))


def code_greedy(d: int, delta: float, target_dim: int) -> dict:
    """Grow a code vector by vector, keeping every new coset far from the old span.

    Each added vector v is the smallest bitmask at distance greater than
    ``floor(delta * d)`` from the current code, so all new codewords have
    weight above ``delta * d``.  ``certified`` reports whether the counting
    bound ``2^(k-1) * V(d, r) < 2^d`` guarantees success in advance.
    """
    if target_dim > d / 4:
        warnings.warn("target dimension above d/4 is outside the guaranteed regime", stacklevel=2)
    r = math.floor(delta * d)
    certified = (1 << max(target_dim - 1, 0)) * binomial_tail(d, r) < (1 << d)
    gens: list[int] = []
    for _ in range(target_dim):
        dist = distance_to_code(d, span(gens), radius=r + 1)
        far = np.flatnonzero(dist > r)
        if len(far) == 0:
            raise PreconditionError(
                f"no extension found at dimension {len(gens)} for d={d}, delta={delta}")
        gens.append(int(far[0]))
    C = LinearCode.spanned_by(d, gens)
    assert C.dim == target_dim and (target_dim == 0 or C.min_weight > delta * d)
    return {"code": C, "certified": certified, "radius": r}


# ---------------------------------------------------------------- actions

def permute_bits(x: np.ndarray | int, perm: Sequence[int]) -> np.ndarray | int:
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros_like(x)
    for i, p in enumerate(perm):
        out |= ((x >> i) & 1) << p
    return int(out) if scalar else out


def compose_elements(g: tuple, h: tuple) -> tuple:
    """(g*h)(x) = g(h(x)) for elements (perm, translation)."""
    pg, tg = g
    ph, th = h
    perm = tuple(pg[ph[i]] for i in range(len(pg)))
    return perm, permute_bits(th, pg) ^ tg


@dataclass(frozen=True)
class CubeAction:
    """Group generated by maps x -> perm(x) + t acting on F_2^d."""

    d: int
    generators: tuple[tuple[tuple[int, ...], int], ...]

    def __post_init__(self):
        gens = []
        for perm, t in self.generators:
            perm = tuple(int(p) for p in perm)
            if sorted(perm) != list(range(self.d)):
                raise ValueError("permutation part is not a permutation of the coordinates")
            if not 0 <= int(t) < 1 << self.d:
                raise ValueError("translation does not fit in d bits")
            gens.append((perm, int(t)))
        object.__setattr__(self, "generators", tuple(gens))

    def apply(self, g, x):
        perm, t = g
        return permute_bits(x, perm) ^ t

    def orbit_labels(self) -> np.ndarray:
        """Label of each point = smallest point in its orbit (union-find)."""
        if self.d > MAX_EXACT_INTEGRAL_DIM:
            raise CapacityError("orbit computation is capped")
        n = 1 << self.d
        ident = tuple(range(self.d))
        if all(perm == ident for perm, _ in self.generators):
            # translation group: the orbit of x is x + span(t), so take the minimum directly
            words = span([t for _, t in self.generators])
            return np.min(np.arange(n)[:, None] ^ words[None, :], axis=1)
        parent = np.arange(n)

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        x = np.arange(n)
        for g in self.generators:
            y = self.apply(g, x)
            for a, b in zip(x.tolist(), y.tolist()):
                ra, rb = find(a), find(b)
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
        return np.array([find(a) for a in range(n)])

    def orbits(self) -> list[tuple[int, ...]]:
        labels = self.orbit_labels()
        groups: dict[int, list[int]] = {}
        for p, lab in enumerate(labels.tolist()):
            groups.setdefault(lab, []).append(p)
        return [tuple(groups[k]) for k in sorted(groups)]

    def elements(self, limit: int = MAX_GROUP_ORDER) -> list[tuple]:
        ident = (tuple(range(self.d)), 0)
        seen = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for h in frontier:
                for g in self.generators:
                    k = compose_elements(g, h)
                    if k not in seen:
                        seen.add(k)
                        nxt.append(k)
                        if len(seen) > limit:
                            raise CapacityError("group order exceeds the enumeration limit")
            frontier = nxt
        return sorted(seen)

    def order(self) -> int:
        return len(self.elements())

    @property
    def transitive_on_coords(self) -> bool:
        if self.d == 0:
            return True
        reach = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for perm, _ in self.generators:
                j = perm[i]
                if j not in reach:
                    reach.add(j)
                    frontier.append(j)
        return len(reach) == self.d

    def is_invariant(self, values: np.ndarray) -> bool:
        x = np.arange(1 << self.d)
        v = np.asarray(values)
        return all(np.array_equal(v[self.apply(g, x)], v) for g in self.generators)

    def average(self, values: np.ndarray) -> np.ndarray:
        """Project a table onto invariant functions by averaging over the group."""
        x = np.arange(1 << self.d)
        els = self.elements()
        v = np.asarray(values, dtype=np.float64)
        out = np.zeros_like(v)
        for g in els:
            out += v[self.apply(g, x)]
        return out / len(els)

    def audit(self) -> dict:
        """Check generators are isometries, orbits partition, orbit sizes divide |G|."""
        x = np.arange(1 << self.d)
        iso = True
        rng = np.random.default_rng(0)
        a = rng.integers(0, 1 << self.d, 256)
        b = rng.integers(0, 1 << self.d, 256)
        for g in self.generators:
            ga, gb = self.apply(g, a), self.apply(g, b)
            if not np.array_equal(np.bitwise_count((ga ^ gb).astype(np.uint64)),
                                  np.bitwise_count((a ^ b).astype(np.uint64))):
                iso = False
            if len(np.unique(self.apply(g, x))) != len(x):
                iso = False
        orbs = self.orbits()
        covered = sorted(p for o in orbs for p in o) == list(range(1 << self.d))
        order = self.order()
        divides = all(order % len(o) == 0 for o in orbs)
        return {"isometries": iso, "partition": covered, "orbit_sizes_divide_order": divides,
                "order": order}

    def to_dict(self) -> dict:
        return {"d": self.d,
                "generators": [{"perm": list(p), "translation": t} for p, t in self.generators]}

    @classmethod
    def from_dict(cls, obj: dict) -> "CubeAction":
        d = int(obj["d"])
        gens = []
        for g in obj["generators"]:
            perm = g.get("perm", list(range(d)))
            gens.append((tuple(perm), int(g.get("translation", 0))))
        return cls(d, tuple(gens))


def identity_perm(d: int) -> tuple[int, ...]:
    return tuple(range(d))


def cyclic_shift_perm(d: int, j: int = 1) -> tuple[int, ...]:
    return tuple((i + j) % d for i in range(d))


def cyclic_action(d: int, step: int = 1) -> CubeAction:
    return CubeAction(d, ((cyclic_shift_perm(d, step), 0),))


def symmetric_action(d: int) -> CubeAction:
    gens = [(cyclic_shift_perm(d), 0)]
    if d > 1:
        swap = list(range(d))
        swap[0], swap[1] = 1, 0
        gens.append((tuple(swap), 0))
    return CubeAction(d, tuple(gens))


def translation_action(d: int, vectors: Sequence[int]) -> CubeAction:
    return CubeAction(d, tuple((identity_perm(d), int(v)) for v in vectors))


def dual_translation_action(C: LinearCode) -> CubeAction:
    """Translations by the dual code; its orbits are the cosets of C-perp."""
    return translation_action(C.d, dual_code(C).gens)


# ---------------------------------------------------------------- quotients

def orbit_quotient(action: CubeAction) -> FiniteMetric:
    """Orbit metric: minimum Hamming distance between orbits, shortest-path closed.

    Computed from the block-minimum matrix without building the full cube
    metric, so it scales to a few thousand points.
    """
    from .finite_metric import floyd_warshall

    d = action.d
    orbs = action.orbits()
    k = len(orbs)
    n = 1 << d
    block = np.empty(n, dtype=np.int64)
    for i, o in enumerate(orbs):
        block[list(o)] = i
    order = np.argsort(block, kind="stable")
    starts = np.searchsorted(block[order], np.arange(k))
    x = np.arange(n, dtype=np.uint64)
    w = np.full((k, k), d + 1, dtype=np.int64)
    for i, o in enumerate(orbs):
        rows = np.bitwise_count(x[list(o)][:, None] ^ x[order][None, :]).astype(np.int64)
        per_block = np.minimum.reduceat(rows, starts, axis=1)
        w[i] = per_block.min(axis=0)
    np.fill_diagonal(w, 0)
    q = floyd_warshall(w.astype(np.float64))
    labels = [format(o[0], f"0{d}b")[::-1] for o in orbs]
    return from_matrix(q.astype(np.int64).tolist(), labels)


def no_geo_check(action: CubeAction) -> dict:
    """Exhaustive comparison of quotient, Hausdorff and block-minimum distances.

    Integer-valued and fully vectorized; the generic (exact, slower) path is
    ``finite_metric.verify_no_geo`` and the two are cross-checked in tests.
    """
    from .finite_metric import floyd_warshall

    d = action.d
    orbs = action.orbits()
    k = len(orbs)
    n = 1 << d
    block = np.empty(n, dtype=np.int64)
    for i, o in enumerate(orbs):
        block[list(o)] = i
    order = np.argsort(block, kind="stable")
    starts = np.searchsorted(block[order], np.arange(k))
    x = np.arange(n, dtype=np.uint64)[order]
    D = np.bitwise_count(x[:, None] ^ x[None, :]).astype(np.int64)
    to_block = np.minimum.reduceat(D, starts, axis=1)  # d(x, U_j), rows sorted by block
    w = np.minimum.reduceat(to_block, starts, axis=0)
    far = np.maximum.reduceat(to_block, starts, axis=0)  # max_{x in U_i} d(x, U_j)
    haus = np.maximum(far, far.T)
    np.fill_diagonal(w, 0)
    q = floyd_warshall(w.astype(np.float64)).astype(np.int64)
    hyp = bool(np.array_equal(to_block, w[block[order]]))
    off = ~np.eye(k, dtype=bool)
    eq = bool(np.array_equal(q[off], haus[off]) and np.array_equal(q[off], w[off]))
    return {"hypothesis_holds": hyp, "equality_holds": eq, "orbits": k}


def syndrome(C: LinearCode, x: np.ndarray) -> np.ndarray:
    """Coset index of x in F_2^d / C-perp: bit i is <x, gens[i]>."""
    x = np.asarray(x, dtype=np.uint64)
    s = np.zeros(x.shape, dtype=np.int64)
    for i, g in enumerate(C.gens):
        s |= (np.bitwise_count(x & np.uint64(g)).astype(np.int64) & 1) << i
    return s


def coset_quotient(C: LinearCode) -> FiniteMetric:
    """F_2^d / C-perp with the minimum Hamming distance between cosets.

    Cosets are indexed by syndromes, so the quotient has 2^dim(C) points.
    By translation invariance the distance between cosets s and s' is the
    least weight of a vector with syndrome s ^ s'.
    """
    if C.dim > 12 or C.d > MAX_EXACT_INTEGRAL_DIM:
        raise CapacityError("coset quotient requires dim(C) <= 12 and d <= 20")
    x = np.arange(1 << C.d, dtype=np.uint64)
    s = syndrome(C, x)
    wt = np.bitwise_count(x).astype(np.int64)
    k = 1 << C.dim
    best = np.full(k, C.d + 1, dtype=np.int64)
    np.minimum.at(best, s, wt)
    idx = np.arange(k)
    dist = best[idx[:, None] ^ idx[None, :]]
    dist[idx, idx] = 0
    labels = [format(i, f"0{C.dim}b")[::-1] if C.dim else "0" for i in range(k)]
    return from_matrix(dist.tolist(), labels)


def coset_action_quotient(C: LinearCode) -> FiniteMetric:
    """Same quotient through the generic orbit machinery (used as an oracle)."""
    return orbit_quotient(dual_translation_action(C))


# ---------------------------------------------------------------- bounds

def certified_average_lower(d: int, group_order: int) -> Fraction:
    """Exact lower bound on the mean orbit distance for any isometry group.

    For each integer radius t in 1..floor(d/2), a union bound over the group
    gives P(rho(Gx, Gy) >= t) >= 1 - |G| 2^-d sum_{k < t} C(d, k), so the mean
    is at least t times that.  The best t is returned, floored at 0.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if group_order < 1:
        raise ValueError("group order must be positive")
    best = Fraction(0)
    tail = 0
    for t in range(1, d // 2 + 1):
        tail += math.comb(d, t - 1)
        val = t * (1 - Fraction(group_order * tail, 1 << d))
        if val > best:
            best = val
    return best


def mean_orbit_distance(q: FiniteMetric, orbit_sizes: Sequence[int]) -> Fraction:
    """Exact mean of the quotient distance over uniform pairs of cube points."""
    M = q.exact_matrix()
    sizes = list(orbit_sizes)
    total = sum(sizes)
    acc = Fraction(0)
    for i in range(q.n):
        for j in range(q.n):
            acc += M[i][j] * sizes[i] * sizes[j]
    return acc / (total * total)


def fourier_vanishing_check(f: fc.SpectralFunction, C: LinearCode) -> dict:
    """Invariance under C-perp forces f^(A) = 0 for 0 < |A| < w(C)."""
    x = np.arange(f.size)
    for v in dual_code(C).gens:
        if not np.allclose(f.values[x ^ v], f.values, atol=IDENTITY_TOL, rtol=0):
            raise PreconditionError("function is not invariant under the dual code")
    c = fc.require_coeffs(f)
    pc = fc.popcounts(f.dim)
    low = (pc > 0) & (pc < C.min_weight)
    worst = float(np.max(np.abs(c[low]))) if low.any() else 0.0
    return {"max_low_coeff": worst, "holds": worst <= IDENTITY_TOL}


def theorem_code_bound(C: LinearCode) -> float:
    """c1(F_2^d / C-perp) >= avg_lower(d, 2^(d - dim C)) * w(C) / d."""
    if C.dim == 0:
        return 0.0
    avg = certified_average_lower(C.d, 1 << (C.d - C.dim))
    return float(avg * C.min_weight / C.d)


def transitive_invariant_inequality(A: fc.SpectralFunction, action: CubeAction) -> dict:
    """2p(1-p) <= (10 / log2 d) * total influence for invariant sets."""
    if not action.transitive_on_coords:
        raise PreconditionError("permutation part is not transitive on coordinates")
    if any(t for _, t in action.generators):
        raise PreconditionError("action must be by coordinate permutations")
    v = A.scalar_values()
    if not action.is_invariant(v):
        raise PreconditionError("set is not invariant under the action")
    d = A.dim
    if d < 2:
        raise PreconditionError("need d >= 2 for log2 d > 0")
    p = float(np.mean(v))
    total = float(np.sum(fc.influences(A)))
    lhs = 2.0 * p * (1.0 - p)
    rhs = 10.0 / math.log2(d) * total
    return {"lhs": lhs, "rhs": rhs, "influence_sum": total, "holds": lhs <= rhs + IDENTITY_TOL}


def corollary_group_bound(action: CubeAction, order: int | None = None) -> float:
    """c1(F_2^d / G) >= avg_lower(d, |G|) * log2(d) / (10 d), never below 1."""
    if not action.transitive_on_coords:
        raise PreconditionError("permutation part is not transitive on coordinates")
    d = action.d
    if d < 2:
        return 1.0
    g = action.order() if order is None else order
    avg = certified_average_lower(d, g)
    return max(1.0, float(avg) * math.log2(d) / (10.0 * d))


def weight_class_action_quotient(d: int) -> FiniteMetric:
    """Quotient by all coordinate permutations: the path 0..d on weights."""
    return from_matrix([[abs(i - j) for j in range(d + 1)] for i in range(d + 1)],
                       [str(i) for i in range(d + 1)])
