"""Partition chains, the length functional and the martingale lower bound.

A chain is a sequence of partitions P^0 = {X}, ..., P^N = singletons, each
refining the previous one, with a step size a_i such that sibling blocks
of level i can be matched by a bijection moving every point at most a_i.
Distances are supplied by a small oracle object with ``n`` and
``block(I, J)`` so that large cubes never need a dense matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import sampling
from .errors import CapacityError, PreconditionError
from .finite_metric import FiniteMetric, distortion, from_matrix, quotient_metric
from .groups import FiniteGroup, is_left_invariant, is_right_invariant
from .tolerances import IDENTITY_TOL

MAX_PERM_N = 8
MAX_CUBE_D = 16
CHAIN_TOL = 1e-12


class ChainError(PreconditionError):
    def __init__(self, message: str, level: int | None = None, witness=None):
        super().__init__(message)
        self.level = level
        self.witness = witness


# -- distance oracles ---------------------------------------------------------


class MatrixDistances:
    def __init__(self, X: FiniteMetric):
        self.metric = X
        self.n = X.n

    def block(self, I, J) -> np.ndarray:
        return self.metric.dist[np.ix_(np.asarray(I), np.asarray(J))]

    def moment(self, p) -> Fraction:
        """Exact mean of d(x, y)^p over ordered pairs (integer p)."""
        M = self.metric.exact_matrix()
        return sum((v ** p for row in M for v in row), Fraction(0)) / self.n ** 2

    @property
    def diam(self) -> float:
        return self.metric.diam


class HammingCubeDistances:
    """F_2^d with the Hamming metric, points are bitmasks."""

    def __init__(self, d: int):
        if d > MAX_CUBE_D:
            raise CapacityError(f"cube oracle is capped at d <= {MAX_CUBE_D}")
        self.d = d
        self.n = 1 << d

    def block(self, I, J) -> np.ndarray:
        I = np.asarray(I, dtype=np.uint64)
        J = np.asarray(J, dtype=np.uint64)
        return np.bitwise_count(I[:, None] ^ J[None, :]).astype(np.float64)

    def moment(self, p) -> Fraction:
        # translation invariance reduces the pair average to the weight distribution
        return Fraction(sum(math.comb(self.d, k) * k ** p for k in range(self.d + 1)), self.n)

    @property
    def diam(self) -> float:
        return float(self.d)


def _derangements(m: int) -> int:
    return round(math.factorial(m) * sum((-1) ** k / math.factorial(k) for k in range(m + 1))) if m else 1


class PermutationDistances:
    """S_n with d(s, t) = #{i : s(i) != t(i)}; points index ``itertools.permutations``."""

    def __init__(self, n: int):
        if n > MAX_PERM_N:
            raise CapacityError(f"permutation oracle is capped at n <= {MAX_PERM_N}")
        self.size = n
        self.perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
        self.n = len(self.perms)

    def block(self, I, J) -> np.ndarray:
        P, Q = self.perms[np.asarray(I)], self.perms[np.asarray(J)]
        return (P[:, None, :] != Q[None, :, :]).sum(axis=2).astype(np.float64)

    def moment(self, p) -> Fraction:
        # bi-invariance: the pair average equals the average over s of d(s, id)^p,
        # and C(n, k) D(n - k) permutations have exactly k fixed points
        n = self.size
        total = sum(math.comb(n, k) * _derangements(n - k) * (n - k) ** p for k in range(n + 1))
        return Fraction(total, math.factorial(n))

    @property
    def diam(self) -> float:
        return float(self.size) if self.size > 1 else 0.0


def as_oracle(base):
    if isinstance(base, FiniteMetric):
        return MatrixDistances(base)
    return base


# -- chains -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PartitionChain:
    base: object
    levels: tuple  # levels[i] = tuple of blocks (tuples of point indices)
    a: tuple
    phi: tuple | None = None  # phi[i-1](B, C) -> images of B in C, or None to search

    def __post_init__(self):
        object.__setattr__(self, "base", as_oracle(self.base))
        lv = tuple(tuple(tuple(int(x) for x in b) for b in P) for P in self.levels)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "a", tuple(self.a))
        if len(self.a) != len(lv) - 1:
            raise ChainError("need one step size per refinement level")

    @property
    def depth(self) -> int:
        return len(self.a)

    def to_dict(self) -> dict:
        return {"levels": [[list(b) for b in P] for P in self.levels], "a": [float(v) for v in self.a]}

    @classmethod
    def from_dict(cls, base, data: dict) -> "PartitionChain":
        return cls(base, tuple(tuple(tuple(b) for b in P) for P in data["levels"]), tuple(data["a"]))


def _labels(n: int, blocks, level: int) -> np.ndarray:
    lab = np.full(n, -1, dtype=np.int64)
    for k, b in enumerate(blocks):
        if not b:
            raise ChainError("empty block", level)
        idx = np.asarray(b)
        if np.any((idx < 0) | (idx >= n)):
            raise ChainError("block index out of range", level, b)
        if np.any(lab[idx] >= 0) or len(set(b)) != len(b):
            raise ChainError("blocks overlap", level, b)
        lab[idx] = k
    if np.any(lab < 0):
        raise ChainError("blocks do not cover the space", level, int(np.flatnonzero(lab < 0)[0]))
    return lab


def _matchable(D: np.ndarray, a: float) -> tuple[bool, object]:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    adj = csr_matrix(D <= a + CHAIN_TOL * max(1.0, a))
    m = maximum_bipartite_matching(adj, perm_type="column")
    unmatched = np.flatnonzero(m < 0)
    return len(unmatched) == 0, (None if len(unmatched) == 0 else int(unmatched[0]))


def validate_chain(chain: PartitionChain) -> bool:
    """Check all chain conditions; raises ChainError with a witness on failure."""
    X = chain.base
    n = X.n
    L = chain.levels
    if not L or len(L[0]) != 1 or len(L[0][0]) != n:
        raise ChainError("first partition must be the whole space", 0)
    if len(L[-1]) != n:
        raise ChainError("last partition must be all singletons", len(L) - 1)
    if any(v <= 0 for v in chain.a):
        raise ChainError("step sizes must be positive")
    prev = _labels(n, L[0], 0)
    for i in range(1, len(L)):
        lab = _labels(n, L[i], i)
        parent_of = {}
        for k, b in enumerate(L[i]):
            parents = set(prev[list(b)].tolist())
            if len(parents) != 1:
                raise ChainError("partition does not refine its predecessor", i, b)
            parent_of.setdefault(parents.pop(), []).append(k)
        a = float(chain.a[i - 1])
        step = chain.phi[i - 1] if chain.phi is not None else None
        for kids in parent_of.values():
            for u, v in itertools.combinations(kids, 2):
                B, C = L[i][u], L[i][v]
                if len(B) != len(C):
                    raise ChainError("sibling blocks differ in size", i, (B, C))
                if step is not None:
                    img = list(step(B, C))
                    if sorted(img) != sorted(C):
                        raise ChainError("supplied map is not a bijection onto the sibling", i, (B, C))
                    dd = np.diag(X.block(B, img)) if len(B) else np.zeros(0)
                    if np.any(dd > a + CHAIN_TOL * max(1.0, a)):
                        raise ChainError("supplied map moves a point too far", i, (B[int(np.argmax(dd))], a))
                else:
                    ok, bad = _matchable(X.block(B, C), a)
                    if not ok:
                        raise ChainError("no bijection within the step size", i, (B[bad], B, C))
        prev = lab
    return True


def length(chain: PartitionChain, p: float = 2) -> float:
    """(sum a_i^p)^{1/p} for a valid chain."""
    validate_chain(chain)
    return length_of_steps(chain.a, p)


def length_of_steps(a: Sequence, p: float = 2) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    if math.isinf(p):
        return float(max(a, default=0))
    return math.fsum(float(v) ** p for v in a) ** (1.0 / p)


def hypercube_chain(d: int, explicit_maps: bool = True) -> PartitionChain:
    """Level i groups points by their first i coordinates; a_i = 1."""
    n = 1 << d
    pts = np.arange(n)
    levels = []
    for i in range(d + 1):
        key = pts & ((1 << i) - 1)
        levels.append(tuple(tuple(np.flatnonzero(key == k).tolist()) for k in range(1 << i)))

    def flip(bit):
        return lambda B, C: [x ^ (1 << bit) for x in B]

    phi = tuple(flip(i) for i in range(d)) if explicit_maps else None
    return PartitionChain(HammingCubeDistances(d), tuple(levels), (1,) * d, phi)


def permutation_chain(n: int, explicit_maps: bool = True) -> PartitionChain:
    """Level i groups permutations by their values at the last i positions; a_i = 2.

    Siblings differ in one value (b versus c) at the newest fixed position,
    and swapping the values b and c is a bijection moving two entries.
    """
    X = PermutationDistances(n)
    P = X.perms
    index = {tuple(int(v) for v in row): k for k, row in enumerate(P)}
    levels = []
    for i in range(max(n - 1, 0) + 1):
        if i == 0:
            levels.append((tuple(range(X.n)),))
            continue
        groups: dict = {}
        for k, row in enumerate(P):
            groups.setdefault(tuple(int(v) for v in row[n - i:]), []).append(k)
        levels.append(tuple(tuple(groups[key]) for key in sorted(groups)))

    def make(i):
        pos = n - i

        def step(B, C):
            b, c = int(P[B[0]][pos]), int(P[C[0]][pos])
            out = []
            for k in B:
                row = P[k].copy()
                ib, ic = int(np.flatnonzero(row == b)[0]), int(np.flatnonzero(row == c)[0])
                row[ib], row[ic] = c, b
                out.append(index[tuple(int(v) for v in row)])
            return out

        return step

    phi = tuple(make(i) for i in range(1, len(levels))) if explicit_maps else None
    return PartitionChain(X, tuple(levels), (2,) * (len(levels) - 1), phi)


# -- smoothness and the length bound ------------------------------------------


@dataclass(frozen=True)
class SmoothnessSpec:
    p: float
    S: float

    def __post_init__(self):
        if not 1 <= self.p <= 2:
            raise ValueError("smoothness exponent must lie in [1, 2]")
        if self.S < 1:
            raise ValueError("smoothness constant is at least 1")


def lq_smoothness(q: float) -> SmoothnessSpec:
    """Known smoothness of L_q: 2-smooth with sqrt(q - 1) for q >= 2, q-smooth with 1 below."""
    if q < 1:
        raise ValueError("q must be at least 1")
    if q >= 2:
        return SmoothnessSpec(2.0, math.sqrt(q - 1))
    return SmoothnessSpec(float(q), 1.0)


HILBERT = SmoothnessSpec(2.0, 1.0)


def pair_moment(base, p) -> Fraction | float:
    """Mean of d(x, y)^p over ordered pairs; exact for integer p."""
    X = as_oracle(base)
    if float(p).is_integer():
        return X.moment(int(p))
    total = []
    idx = np.arange(X.n)
    for s in range(0, X.n, 256):
        total.append(float(np.sum(X.block(idx[s:s + 256], idx) ** p)))
    return sampling.fixed_order_sum(total) / X.n ** 2


def theorem_length_bound(chain: PartitionChain, spec: SmoothnessSpec = HILBERT) -> dict:
    """Distortion lower bound into a p-smooth space from a valid chain.

    value = (mean d^p)^{1/p} / (2^{1 - 1/p} S l_p); distortion is at least 1,
    so the reported bound is clamped there.
    """
    validate_chain(chain)
    p = spec.p
    ell = length_of_steps(chain.a, p)
    if ell == 0:
        return {"value": math.inf, "bound": math.inf, "length": 0.0, "clamped": False}
    avg = pair_moment(chain.base, p)
    value = float(avg) ** (1.0 / p) / (2 ** (1 - 1 / p) * spec.S * ell)
    return {
        "value": value,
        "bound": max(1.0, value),
        "length": ell,
        "moment": avg,
        "clamped": value < 1.0,
    }


def conditional_averages(chain: PartitionChain, f: np.ndarray) -> list[np.ndarray]:
    """f_i(x) = mean of f over the level-i block containing x."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    out = []
    for P in chain.levels:
        g = np.empty_like(f)
        for b in P:
            g[list(b)] = f[list(b)].mean(axis=0)
        out.append(g)
    return out


def lipschitz_constant(base, f: np.ndarray) -> float:
    X = as_oracle(base)
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    idx = np.arange(X.n)
    best = 0.0
    for s in range(0, X.n, 256):
        I = idx[s:s + 256]
        D = X.block(I, idx)
        diff = np.linalg.norm(f[I][:, None, :] - f[None, :, :], axis=2)
        mask = D > 0
        if mask.any():
            best = max(best, float(np.max(diff[mask] / D[mask])))
    return best


def martingale_p2_identity(chain: PartitionChain, f: np.ndarray) -> dict:
    """Orthogonality of martingale increments along the chain.

    E|f_N - f_0|^2 = sum_j E|f_{j+1} - f_j|^2, and each increment is
    pointwise at most Lip(f) * a_{j+1}.
    """
    validate_chain(chain)
    fs = conditional_averages(chain, f)
    total = float(np.mean(np.sum((fs[-1] - fs[0]) ** 2, axis=1)))
    incs = [np.sqrt(np.sum((fs[j + 1] - fs[j]) ** 2, axis=1)) for j in range(chain.depth)]
    energies = [float(np.mean(v ** 2)) for v in incs]
    residual = abs(total - math.fsum(energies))
    lip = lipschitz_constant(chain.base, fs[-1])
    ratios = [float(v.max()) / (lip * float(a)) if lip > 0 else 0.0 for v, a in zip(incs, chain.a)]
    per_level = all(r <= 1 + 1e-12 for r in ratios)
    return {
        "residual": residual,
        "total": total,
        "increments": energies,
        "lipschitz": lip,
        "max_increment_ratio": max(ratios, default=0.0),
        "per_level_holds": per_level,
        "holds": residual <= IDENTITY_TOL * max(1.0, total) and per_level,
    }


# -- subgroup chains ----------------------------------------------------------


def right_cosets(G: FiniteGroup, H: Sequence[int], within: Sequence[int] | None = None) -> list[tuple[int, ...]]:
    """Cosets H x for x in ``within`` (default all of G), ordered by smallest element."""
    seen = set()
    out = []
    for x in sorted(within if within is not None else range(G.order)):
        if x in seen:
            continue
        c = tuple(sorted(int(G.table[h, x]) for h in H))
        seen.update(c)
        out.append(c)
    return out


def subgroup_chain_length(G: FiniteGroup, dist: np.ndarray, subgroups: Sequence[Sequence[int]],
                          gens: Sequence[int] | None = None) -> dict:
    """Length bound from a decreasing subgroup chain G = G_0 > ... > G_m = {e}.

    a_i is the diameter of the quotient of G_{i-1} by the cosets of G_i.  The
    coset-refinement chain with these steps is built and validated.
    """
    dist = np.asarray(dist)
    if not (is_left_invariant(G, dist, gens) and is_right_invariant(G, dist, gens)):
        raise PreconditionError("metric is not invariant under the group")
    subs = [tuple(sorted(int(v) for v in H)) for H in subgroups]
    if len(subs[0]) != G.order or subs[-1] != (G.identity,):
        raise ChainError("chain must run from G down to the identity")
    for i, H in enumerate(subs):
        if not G.is_subgroup(H):
            raise ChainError("not a subgroup", i, H)
        if i and not set(H) <= set(subs[i - 1]):
            raise ChainError("subgroups must decrease", i, H)
    X = from_matrix(dist.tolist())
    a = []
    for K, H in zip(subs, subs[1:]):
        sub = X.subspace(K)
        pos = {g: k for k, g in enumerate(K)}
        blocks = [[pos[g] for g in c] for c in right_cosets(G, H, K)]
        a.append(quotient_metric(sub, blocks).quotient.exact_diam())
    levels = [tuple(right_cosets(G, H)) for H in subs]
    chain = PartitionChain(X, tuple(levels), tuple(a))
    valid = validate_chain(chain)
    return {"length": length_of_steps(a, 2), "a": a, "chain": chain, "valid": valid}


def permutation_matrix_distortion(n: int) -> dict:
    """Distortion of s -> permutation matrix of s (Frobenius norm) on S_n."""
    X = PermutationDistances(n)
    if X.n > 720:
        raise CapacityError("explicit distortion is capped at n <= 6")
    img = np.zeros((X.n, n * n))
    for k, row in enumerate(X.perms):
        img[k, np.arange(n) * n + row] = 1.0
    M = from_matrix(X.block(np.arange(X.n), np.arange(X.n)).astype(int).tolist())
    res = distortion(img, M, "l2")
    return {"measured": res["dist"], "closed_form": math.sqrt(n / 2) if n > 1 else 1.0}


__all__ = [
    "ChainError",
    "MatrixDistances",
    "HammingCubeDistances",
    "PermutationDistances",
    "PartitionChain",
    "validate_chain",
    "length",
    "length_of_steps",
    "hypercube_chain",
    "permutation_chain",
    "SmoothnessSpec",
    "lq_smoothness",
    "HILBERT",
    "pair_moment",
    "theorem_length_bound",
    "conditional_averages",
    "lipschitz_constant",
    "martingale_p2_identity",
    "right_cosets",
    "subgroup_chain_length",
    "permutation_matrix_distortion",
]
