"""Finite metric spaces, partition quotients, distortion and exact c1.

A :class:`FiniteMetric` always carries a float matrix.  When it was built
from rationals (decimal strings, integers, Fractions) it also carries an
exact matrix of Fractions, and the exact routines use that one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import simplex
from .errors import CapacityError, PreconditionError
from .serialize import fraction_str, parse_rational

TRIANGLE_TOL = 1e-12
MAX_LP_POINTS = 12


@dataclass(frozen=True)
class FiniteMetric:
    n: int
    labels: tuple[str, ...]
    dist: np.ndarray
    exact: tuple[tuple[Fraction, ...], ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        d = np.ascontiguousarray(self.dist, dtype=np.float64)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        if d.shape != (self.n, self.n):
            raise ValueError("distance matrix has the wrong shape")
        if len(self.labels) != self.n:
            raise ValueError("label count does not match n")
        validate_metric(d, self.exact)

    @property
    def diam(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    def exact_diam(self) -> Fraction:
        return max((v for row in self.exact_matrix() for v in row), default=Fraction(0))

    def exact_matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        if self.exact is not None:
            return self.exact
        return tuple(tuple(Fraction(repr(float(v))) for v in row) for row in self.dist)

    def subspace(self, idx: Sequence[int]) -> "FiniteMetric":
        idx = list(idx)
        ex = None
        if self.exact is not None:
            ex = tuple(tuple(self.exact[i][j] for j in idx) for i in idx)
        return FiniteMetric(len(idx), tuple(self.labels[i] for i in idx),
                            self.dist[np.ix_(idx, idx)], ex)

    def scaled(self, t) -> "FiniteMetric":
        t = Fraction(t)
        ex = tuple(tuple(v * t for v in row) for row in self.exact_matrix())
        return FiniteMetric(self.n, self.labels, self.dist * float(t), ex)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "labels": list(self.labels),
            "dist": [[fraction_str(v) if self.exact is not None else format(float(v), ".17g")
                      for v in row] for row in (self.exact if self.exact is not None else self.dist)],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FiniteMetric":
        n = int(obj["n"])
        flat = obj["dist"]
        rows = flat if flat and isinstance(flat[0], list) else [flat[i * n:(i + 1) * n] for i in range(n)]
        return from_matrix(rows, obj.get("labels"))


def validate_metric(d: np.ndarray, exact=None) -> None:
    n = d.shape[0]
    if exact is not None:
        for i in range(n):
            if exact[i][i] != 0:
                raise ValueError("nonzero diagonal")
            for j in range(i + 1, n):
                if exact[i][j] != exact[j][i]:
                    raise ValueError("distance matrix is not symmetric")
                if exact[i][j] <= 0:
                    raise ValueError("distinct points must have positive distance")
    if not np.all(np.diag(d) == 0):
        raise ValueError("nonzero diagonal")
    if not np.array_equal(d, d.T):
        raise ValueError("distance matrix is not symmetric")
    off = d[~np.eye(n, dtype=bool)]
    if np.any(off <= 0):
        raise ValueError("distinct points must have positive distance")
    if n:
        tol = TRIANGLE_TOL * max(1.0, d.max())
        step = max(1, (1 << 22) // (n * n))
        for k in range(0, n, step):
            via = d[:, k:k + step].T[:, :, None] + d[k:k + step, None, :]
            if np.any(d[None, :, :] > via + tol):
                raise ValueError("triangle inequality violated")


def from_matrix(rows, labels=None) -> FiniteMetric:
    """Build a metric keeping exact values when the entries are rational."""
    exact = tuple(tuple(parse_rational(v) for v in row) for row in rows)
    n = len(exact)
    dist = np.array([[float(v) for v in row] for row in exact], dtype=np.float64)
    labels = tuple(str(x) for x in labels) if labels is not None else tuple(str(i) for i in range(n))
    return FiniteMetric(n, labels, dist, exact)


def floyd_warshall(w):
    """All-pairs shortest paths; float arrays are vectorized, lists stay exact."""
    if isinstance(w, np.ndarray):
        d = np.array(w, dtype=np.float64)
        for k in range(d.shape[0]):
            d = np.minimum(d, d[:, k, None] + d[None, k, :])
        return d
    n = len(w)
    d = [list(row) for row in w]
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik is None:
                continue
            row = d[i]
            for j in range(n):
                if dk[j] is None:
                    continue
                cand = dik + dk[j]
                if row[j] is None or cand < row[j]:
                    row[j] = cand
    return d


def graph_metric(n: int, edges, labels=None) -> FiniteMetric:
    """Shortest-path metric of a connected graph with rational edge lengths."""
    w = [[Fraction(0) if i == j else None for j in range(n)] for i in range(n)]
    for e in edges:
        i, j = e[0], e[1]
        length = parse_rational(e[2]) if len(e) > 2 else Fraction(1)
        if w[i][j] is None or length < w[i][j]:
            w[i][j] = w[j][i] = length
    d = floyd_warshall(w)
    if any(v is None for row in d for v in row):
        raise PreconditionError("graph is disconnected")
    return from_matrix(d, labels)


def hamming_cube(d: int) -> FiniteMetric:
    x = np.arange(1 << d, dtype=np.uint64)
    dist = np.bitwise_count(x[:, None] ^ x[None, :]).astype(np.int64)
    return from_matrix(dist.tolist(), [format(i, f"0{d}b")[::-1] for i in range(1 << d)])


def _subset(A) -> list[int]:
    A = sorted(set(int(a) for a in A))
    if not A:
        raise PreconditionError("subsets must be nonempty")
    return A


def hausdorff_distance(X: FiniteMetric, A, B, exact: bool = False):
    A, B = _subset(A), _subset(B)
    if exact:
        M = X.exact_matrix()
        ab = max(min(M[a][b] for b in B) for a in A)
        ba = max(min(M[a][b] for a in A) for b in B)
        return max(ab, ba)
    sub = X.dist[np.ix_(A, B)]
    return float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))


@dataclass(frozen=True)
class PartitionQuotient:
    base: FiniteMetric
    blocks: tuple[tuple[int, ...], ...]
    weights: tuple[tuple[Fraction, ...], ...]
    quotient: FiniteMetric


def _check_partition(n: int, blocks) -> tuple[tuple[int, ...], ...]:
    blocks = tuple(tuple(sorted(int(i) for i in b)) for b in blocks)
    seen = [x for b in blocks for x in b]
    if any(len(b) == 0 for b in blocks) or sorted(seen) != list(range(n)):
        raise PreconditionError("blocks must partition the point set")
    return blocks


def block_distances(X: FiniteMetric, blocks) -> list[list[Fraction]]:
    """Minimum exact distance between every pair of blocks."""
    M = X.exact_matrix()
    k = len(blocks)
    w = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            v = min(M[a][b] for a in blocks[i] for b in blocks[j])
            w[i][j] = w[j][i] = v
    return w


def quotient_metric(X: FiniteMetric, blocks) -> PartitionQuotient:
    blocks = _check_partition(X.n, blocks)
    w = block_distances(X, blocks)
    q = floyd_warshall(w)
    labels = ["{" + ",".join(X.labels[i] for i in b) + "}" for b in blocks]
    return PartitionQuotient(X, blocks, tuple(tuple(r) for r in w), from_matrix(q, labels))


def verify_no_geo(q: PartitionQuotient) -> dict:
    """Compare quotient distance, Hausdorff distance and block minimum distance.

    The hypothesis is that every point of a block realises the block-to-block
    minimum distance to every other block.
    """
    M = q.base.exact_matrix()
    k = len(q.blocks)
    hyp = True
    eq = True
    Q = q.quotient.exact_matrix()
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            wij = q.weights[i][j]
            for x in q.blocks[i]:
                if min(M[x][y] for y in q.blocks[j]) != wij:
                    hyp = False
            h = hausdorff_distance(q.base, q.blocks[i], q.blocks[j], exact=True)
            if not (Q[i][j] == h == wij):
                eq = False
    return {"hypothesis_holds": hyp, "equality_holds": eq}


def pair_norms(diff: np.ndarray, norm: str) -> np.ndarray:
    if norm == "l1":
        return np.abs(diff).sum(axis=-1)
    if norm == "l2":
        return np.sqrt((diff**2).sum(axis=-1))
    raise ValueError(f"unknown norm {norm!r}")


def distortion(image, X: FiniteMetric, norm: str = "l2") -> dict:
    """Lipschitz constants of a map given as an ``(n, k)`` table of images."""
    Y = np.asarray(image, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != X.n:
        raise ValueError("one image vector per point is required")
    iu = np.triu_indices(X.n, 1)
    img = pair_norms(Y[:, None, :] - Y[None, :, :], norm)[iu]
    src = X.dist[iu]
    if len(src) == 0:
        return {"lip": 0.0, "inv_lip": 0.0, "dist": 1.0, "injective": True}
    if np.any(img == 0):
        return {"lip": float(np.max(img / src)), "inv_lip": math.inf, "dist": math.inf,
                "injective": False}
    lip = float(np.max(img / src))
    inv = float(np.max(src / img))
    return {"lip": lip, "inv_lip": inv, "dist": lip * inv, "injective": True}


@dataclass(frozen=True)
class CutDecomposition:
    """Nonnegative weights on cuts; masks never contain point 0."""

    n: int
    weights: tuple[tuple[int, Fraction], ...]

    def semimetric(self) -> list[list[Fraction]]:
        n = self.n
        rho = [[Fraction(0)] * n for _ in range(n)]
        for mask, lam in self.weights:
            for x in range(n):
                for y in range(x + 1, n):
                    if (mask >> x & 1) != (mask >> y & 1):
                        rho[x][y] += lam
                        rho[y][x] += lam
        return rho

    def to_dict(self) -> list:
        return [{"mask": m, "weight": fraction_str(w)} for m, w in self.weights]


def canonical_cuts(n: int) -> list[int]:
    """Masks of all proper nonempty subsets not containing point 0."""
    return [m << 1 for m in range(1, 1 << (n - 1))]


def cut_matrix(n: int, masks=None) -> np.ndarray:
    """``(pairs, cuts)`` 0/1 matrix of cut semimetrics, pairs in triu order."""
    masks = canonical_cuts(n) if masks is None else masks
    m = np.asarray(masks, dtype=np.int64)
    iu = np.triu_indices(n, 1)
    bx = (m[None, :] >> iu[0][:, None]) & 1
    by = (m[None, :] >> iu[1][:, None]) & 1
    return (bx != by).astype(np.int64)


def exact_c1_lp(X: FiniteMetric) -> dict:
    """Least distortion of X into L1, solved exactly over the cut cone.

    Maximizes t subject to t*d(p) <= sum_S lam_S delta_S(p) <= d(p) on every
    pair p.  The optimum t* equals 1/c1, and lam/t* is a witness cut
    decomposition with d <= rho <= c1*d.
    """
    n = X.n
    if n > MAX_LP_POINTS:
        raise CapacityError(f"exact c1 is limited to n <= {MAX_LP_POINTS}")
    if n <= 2:
        weights = ((2, X.exact_matrix()[0][1]),) if n == 2 else ()
        return {"value": Fraction(1), "witness": CutDecomposition(n, weights)}
    M = X.exact_matrix()
    iu = list(zip(*np.triu_indices(n, 1)))
    dp = [M[i][j] for i, j in iu]
    den = 1
    for v in dp:
        den = den * v.denominator // math.gcd(den, v.denominator)
    di = [int(v * den) for v in dp]
    masks = canonical_cuts(n)
    C = cut_matrix(n, masks).tolist()
    K = len(masks)
    A = []
    b = []
    for p in range(len(iu)):
        A.append(C[p] + [0])
        b.append(di[p])
    for p in range(len(iu)):
        A.append([-v for v in C[p]] + [di[p]])
        b.append(0)
    c = [0] * K + [1]
    res = simplex.maximize(c, A, b)
    t = res.value
    # a single cut family scaled up is always feasible, so t* > 0
    assert t > 0, "cut-cone LP must have a positive optimum"
    c1 = 1 / t
    weights = tuple((masks[s], res.x[s] / (t * den)) for s in range(K) if res.x[s] != 0)
    witness = CutDecomposition(n, weights)
    rho = witness.semimetric()
    for i, j in iu:
        if not (M[i][j] <= rho[i][j] <= c1 * M[i][j]):
            raise ArithmeticError("cut witness fails the distortion certificate")
    return {"value": c1, "witness": witness, "pivots": res.pivots}


def is_cut_cone_metric(rho: list[list[Fraction]]) -> bool:
    """Exact test that a semimetric with positive off-diagonal is L1-embeddable."""
    return exact_c1_lp(from_matrix(rho))["value"] == 1


def random_metric(n: int, rng: np.random.Generator, low: int = 1, high: int = 5) -> FiniteMetric:
    """Shortest-path closure of random integer weights on the complete graph."""
    w = rng.integers(low, high + 1, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    rows = floyd_warshall([[Fraction(int(v)) for v in row] for row in w])
    return from_matrix(rows)


def all_pairs(n: int):
    return itertools.combinations(range(n), 2)
