"""Full-rank lattices in R^n: duals, reduction and enumeration.

A basis is an ``n x n`` matrix whose columns are the basis vectors.
Enumeration works on the upper-triangular factor ``R`` of ``B = QR``,
since ``||B z - t|| = ||R (z - B^-1 t)||``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .. import sampling
from ..errors import CapacityError, PreconditionError

MAX_ENUM_DIM = 8
MAX_KZ_DIM = 6
MAX_LLL_DIM = 20
MAX_HULL_DIM = 6
LLL_DELTA = 0.99
DUAL_TOL = 1e-10
_REL = 1e-9


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    basis: np.ndarray

    def __post_init__(self):
        B = np.array(self.basis, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("basis must be a square matrix")
        if not np.all(np.isfinite(B)):
            raise ValueError("basis has non-finite entries")
        scale = float(np.prod(np.linalg.norm(B, axis=0))) if B.size else 1.0
        if scale == 0.0 or abs(np.linalg.det(B)) <= 1e-12 * scale:
            raise PreconditionError("singular basis")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def gram(self) -> np.ndarray:
        G = self.basis.T @ self.basis
        G.setflags(write=False)
        return G

    @property
    def det(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    def column(self, i: int) -> np.ndarray:
        return self.basis[:, i].copy()

    def scaled(self, t: float) -> "LatticeBasis":
        return LatticeBasis(self.basis * float(t))

    def coords(self, x) -> np.ndarray:
        """Real coefficients of x (or rows of x) in this basis."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return np.linalg.solve(self.basis, x)
        return np.linalg.solve(self.basis, x.T).T

    def to_dict(self) -> dict:
        return {"n": self.n, "basis": [[float(v) for v in row] for row in self.basis]}

    @classmethod
    def from_dict(cls, data: dict) -> "LatticeBasis":
        B = np.array(data["basis"], dtype=np.float64)
        if B.shape != (int(data["n"]), int(data["n"])):
            raise ValueError("basis shape does not match n")
        return cls(B)


def load_lattice(path) -> LatticeBasis:
    with open(path) as fh:
        return LatticeBasis.from_dict(json.load(fh))


def integer_lattice(n: int) -> LatticeBasis:
    return LatticeBasis(np.eye(n))


def d4_lattice() -> LatticeBasis:
    """Integer vectors in R^4 with even coordinate sum."""
    cols = [(-1, -1, 0, 0), (1, -1, 0, 0), (0, 1, -1, 0), (0, 0, 1, -1)]
    return LatticeBasis(np.array(cols, dtype=np.float64).T)


def e8_lattice() -> LatticeBasis:
    rows = [[2, 0, 0, 0, 0, 0, 0, 0]]
    for i in range(6):
        r = [0] * 8
        r[i], r[i + 1] = -1, 1
        rows.append(r)
    rows.append([0.5] * 8)
    return LatticeBasis(np.array(rows, dtype=np.float64).T)


def dual_basis(L: LatticeBasis) -> LatticeBasis:
    D = LatticeBasis(np.linalg.inv(L.basis).T)
    if np.max(np.abs(D.basis.T @ L.basis - np.eye(L.n))) > DUAL_TOL * max(1.0, np.linalg.cond(L.basis)):
        raise PreconditionError("basis too ill-conditioned for a reliable dual")
    return D


def gram_schmidt(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (mu, ||b*_i||^2) for the columns of B."""
    n = B.shape[1]
    Bs = np.zeros_like(B, dtype=np.float64)
    mu = np.eye(n)
    for i in range(n):
        v = B[:, i].astype(np.float64)
        for j in range(i):
            mu[i, j] = B[:, i] @ Bs[:, j] / (Bs[:, j] @ Bs[:, j])
            v = v - mu[i, j] * Bs[:, j]
        Bs[:, i] = v
    return mu, np.einsum("ij,ij->j", Bs, Bs)


def _lll_transform(B: np.ndarray, delta: float) -> np.ndarray:
    n = B.shape[1]
    U = np.eye(n, dtype=np.int64)
    B = B.copy()
    k = 1
    while k < n:
        mu, bb = gram_schmidt(B)
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[:, k] -= q * B[:, j]
                U[:, k] -= q * U[:, j]
                mu[k, : j + 1] -= q * mu[j, : j + 1]
        if bb[k] >= (delta - mu[k, k - 1] ** 2) * bb[k - 1]:
            k += 1
        else:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            k = max(k - 1, 1)
    return U


def lll_basis(L: LatticeBasis, delta: float = LLL_DELTA) -> LatticeBasis:
    """LLL-reduced basis (a heuristic stand-in for KZ in higher rank)."""
    if L.n > MAX_LLL_DIM:
        raise CapacityError(f"LLL is capped at n <= {MAX_LLL_DIM}")
    if not 0.25 < delta < 1:
        raise ValueError("delta must lie in (1/4, 1)")
    U = _lll_transform(L.basis.copy(), delta)
    return LatticeBasis(L.basis @ U)


def lovasz_audit(L: LatticeBasis, delta: float = LLL_DELTA, tol: float = 1e-9) -> dict:
    mu, bb = gram_schmidt(L.basis)
    n = L.n
    size = all(abs(mu[i, j]) <= 0.5 + tol for i in range(n) for j in range(i))
    lov = all(delta * bb[k - 1] <= bb[k] + mu[k, k - 1] ** 2 * bb[k - 1] + tol * bb[k - 1] for k in range(1, n))
    return {"size_reduced": size, "lovasz": lov, "holds": size and lov}


def _triangular(B: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(B)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return R * s[:, None]


def _search(R: np.ndarray, y: np.ndarray, radius2: float, on_leaf, shrink: bool, top=None):
    """Depth-first walk over integer z with ||R(z - y)||^2 <= radius2.

    ``on_leaf(z, dist2)`` returns a possibly smaller radius when ``shrink``.
    ``top`` restricts the last coefficient to the given values.
    """
    n = R.shape[0]
    z = np.zeros(n, dtype=np.int64)
    state = {"r2": radius2}

    def rec(i: int, partial: float):
        # offset from already fixed coordinates i+1..n-1
        c = y[i] - (R[i, i + 1:] @ (z[i + 1:] - y[i + 1:])) / R[i, i]
        room = state["r2"] - partial
        if room < 0:
            return
        w = math.sqrt(room) / abs(R[i, i])
        lo, hi = math.ceil(c - w - 1e-12), math.floor(c + w + 1e-12)
        if i == n - 1 and top is not None:
            cand = [v for v in top if lo <= v <= hi]
        else:
            cand = sorted(range(lo, hi + 1), key=lambda v: (abs(v - c), v))
        for v in cand:
            z[i] = v
            step = (R[i, i] * (v - c)) ** 2
            p = partial + step
            if p > state["r2"] * (1 + _REL) + 1e-300:
                # candidates are sorted by distance to the centre
                break
            if i == 0:
                out = on_leaf(z.copy(), p)
                if shrink and out is not None:
                    state["r2"] = min(state["r2"], out)
            else:
                rec(i - 1, p)
        z[i] = 0

    rec(n - 1, 0.0)


def _top_values(R: np.ndarray, y: np.ndarray, radius2: float) -> list[int]:
    n = R.shape[0]
    c = y[n - 1]
    w = math.sqrt(radius2) / abs(R[n - 1, n - 1])
    return list(range(math.ceil(c - w - 1e-12), math.floor(c + w + 1e-12) + 1))


def _best(B: np.ndarray, target: np.ndarray | None, radius2: float, exclude_zero: bool):
    """Minimize ||B z - target|| over integer z, sharded on the top coefficient."""
    R = _triangular(B)
    y = np.zeros(B.shape[0]) if target is None else np.linalg.solve(B, target)
    tops = _top_values(R, y, radius2)

    def shard(v):
        found = []

        def leaf(z, d2):
            if exclude_zero and not z.any():
                return None
            found.append((d2, tuple(int(a) for a in z)))
            return d2

        _search(R, y, radius2, leaf, shrink=True, top=[v])
        if not found:
            return None
        return min(found)

    res = [r for r in sampling.ordered_map(shard, tops) if r is not None]
    if not res:
        return None
    return min(res)


def _check_enum(n: int):
    if n > MAX_ENUM_DIM:
        raise CapacityError(f"exact enumeration is capped at n <= {MAX_ENUM_DIM}")


def shortest_vector(L: LatticeBasis) -> dict:
    """Exact N(L) with a witness vector (and its coefficients in L's basis)."""
    _check_enum(L.n)
    R = lll_basis(L)
    U = np.rint(np.linalg.solve(L.basis, R.basis)).astype(np.int64)
    start = float(np.min(np.einsum("ij,ij->j", R.basis, R.basis)))
    d2, z = _best(R.basis, None, start * (1 + 1e-9), exclude_zero=True)
    coeff = U @ np.array(z, dtype=np.int64)
    v = L.basis @ coeff
    return {"N": float(np.linalg.norm(v)), "vector": v, "coefficients": coeff}


def babai_nearest_plane(L: LatticeBasis, X: np.ndarray) -> np.ndarray:
    """Integer coefficients of a nearby lattice point for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    R = _triangular(L.basis)
    Y = np.linalg.solve(L.basis, X.T).T
    n = L.n
    Z = np.zeros_like(Y)
    for i in range(n - 1, -1, -1):
        c = Y[:, i] - (Z[:, i + 1:] - Y[:, i + 1:]) @ R[i, i + 1:] / R[i, i]
        Z[:, i] = np.rint(c)
    return Z.astype(np.int64)


def closest_vector(L: LatticeBasis, target) -> dict:
    """Exact closest lattice point to ``target``."""
    _check_enum(L.n)
    t = np.asarray(target, dtype=np.float64)
    R = lll_basis(L)
    U = np.rint(np.linalg.solve(L.basis, R.basis)).astype(np.int64)
    z0 = babai_nearest_plane(R, t)[0]
    start = float(np.sum((R.basis @ z0 - t) ** 2))
    d2, z = _best(R.basis, t, start * (1 + 1e-9) + 1e-300, exclude_zero=False)
    coeff = U @ np.array(z, dtype=np.int64)
    v = L.basis @ coeff
    return {"distance": float(np.linalg.norm(t - v)), "vector": v, "coefficients": coeff}


def torus_distance(L: LatticeBasis, x, y) -> float:
    """Quotient distance on R^n / L."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != (L.n,) or y.shape != (L.n,):
        raise ValueError("points must live in R^n")
    return closest_vector(L, x - y)["distance"]


def vectors_in_ball(L: LatticeBasis, radius: float, limit: int = 200000) -> np.ndarray:
    """All lattice vectors of norm <= radius, as rows (zero included)."""
    _check_enum(L.n)
    R = lll_basis(L)
    T = _triangular(R.basis)
    out = []

    def leaf(z, d2):
        out.append(z)
        if len(out) > limit:
            raise CapacityError("too many lattice vectors in the ball")

    _search(T, np.zeros(L.n), radius * radius * (1 + 1e-9), leaf, shrink=False)
    Z = np.array(out, dtype=np.int64).reshape(-1, L.n)
    return Z @ R.basis.T


def nearest_plane_radius(L: LatticeBasis) -> float:
    """Certified upper bound on the covering radius, 0.5 * sqrt(sum ||b*_i||^2)."""
    _, bb = gram_schmidt(lll_basis(L).basis if L.n <= MAX_LLL_DIM else L.basis)
    return 0.5 * math.sqrt(float(np.sum(bb)))


class DistanceTable:
    """Vectorized distance to the lattice for batches of points.

    Points are first pulled in by the nearest plane rule, after which the
    closest lattice point lies within twice the nearest plane radius.
    """

    def __init__(self, L: LatticeBasis, limit: int = 50000):
        self.L = lll_basis(L)
        self.rho = nearest_plane_radius(self.L)
        self.V = vectors_in_ball(self.L, 2.0 * self.rho * (1 + 1e-9), limit=limit)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Z = babai_nearest_plane(self.L, X)
        Xr = X - Z @ self.L.basis.T
        out = np.empty(len(Xr))
        for s in range(0, len(Xr), 512):
            chunk = Xr[s:s + 512]
            diff = chunk[:, None, :] - self.V[None, :, :]
            out[s:s + 512] = np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff), axis=1))
        return out


def distance_to_lattice(L: LatticeBasis, X: np.ndarray) -> np.ndarray:
    try:
        return DistanceTable(L)(X)
    except CapacityError:
        return np.array([closest_vector(L, x)["distance"] for x in np.atleast_2d(X)])


def relevant_vectors(L: LatticeBasis) -> np.ndarray:
    """Coset-minimal vectors of L / 2L; a superset of the Voronoi-relevant ones."""
    R = lll_basis(L)
    V = vectors_in_ball(R, 2.0 * nearest_plane_radius(R) * (1 + 1e-9))
    Z = np.rint(np.linalg.solve(R.basis, V.T).T).astype(np.int64)
    norms = np.einsum("ij,ij->i", V, V)
    best: dict = {}
    for v, z, nn in zip(V, Z, norms):
        if not z.any():
            continue
        key = tuple(int(a) for a in z % 2)
        cur = best.get(key)
        if cur is None or nn < cur[0] - 1e-9 * max(1.0, nn):
            best[key] = (nn, [v])
        elif abs(nn - cur[0]) <= 1e-9 * max(1.0, nn):
            cur[1].append(v)
    out = [v for _, vs in best.values() for v in vs]
    return np.array(out)


def voronoi_vertices(L: LatticeBasis) -> np.ndarray:
    """Vertices of the Voronoi cell of 0."""
    if L.n == 1:
        h = abs(L.basis[0, 0]) / 2.0
        return np.array([[-h], [h]])
    if L.n > MAX_HULL_DIM:
        raise CapacityError(f"Voronoi vertices are capped at n <= {MAX_HULL_DIM}")
    from scipy.spatial import HalfspaceIntersection

    V = relevant_vectors(L)
    hs = np.hstack([V, -0.5 * np.einsum("ij,ij->i", V, V)[:, None]])
    pts = HalfspaceIntersection(hs, np.zeros(L.n)).intersections
    # merge numerically repeated vertices
    keyed = {tuple(np.round(p, 9)): p for p in pts}
    return np.array([keyed[k] for k in sorted(keyed)])


def covering_radius_bracket(L: LatticeBasis, grid_resolution: int = 4, samples: int = 256,
                            seed: int | None = None) -> dict:
    """Certified interval [lo, hi] containing the covering radius.

    ``lo`` is the largest exact distance to the lattice found over a grid of
    the fundamental cell, random points and candidate deep holes.  ``hi`` is
    the largest Voronoi vertex norm (n <= 6), never worse than the nearest
    plane bound.
    """
    seed = sampling.default_seed() if seed is None else seed
    n = L.n
    table = None
    try:
        table = DistanceTable(L)
    except CapacityError:
        pass

    def dist(X):
        if table is not None:
            return table(X)
        return np.array([closest_vector(L, x)["distance"] for x in X])

    hi = nearest_plane_radius(L)
    method = "nearest_plane"
    cands = []
    # per-point cost is |V| for the table and a full enumeration without it
    unit = len(table.V) if table is not None else 5000
    if grid_resolution > 0 and grid_resolution ** n * unit <= 2e7:
        g = (np.arange(grid_resolution) + 0.5) / grid_resolution
        A = np.array(list(itertools.product(g, repeat=n)))
        cands.append(A @ L.basis.T)
    for b, size in sampling.blocks(samples):
        A = sampling.block_rng(seed, "covering", b).random((size, n))
        cands.append(A @ L.basis.T)
    if n <= MAX_HULL_DIM:
        verts = voronoi_vertices(L)
        vhi = float(np.max(np.linalg.norm(verts, axis=1))) * (1 + 1e-9) + 1e-12
        if vhi < hi:
            hi, method = vhi, "voronoi_vertices"
        cands.append(verts)
    X = np.vstack(cands)
    lo = float(np.max(dist(X)))
    if lo > hi * (1 + 1e-9):
        raise AssertionError(f"covering bracket inverted: lo={lo} hi={hi}")
    lo = min(lo, hi)
    return {"lo": lo, "hi": hi, "width": hi - lo, "method": method}


def _complete_unimodular(z: np.ndarray) -> np.ndarray:
    """Integer matrix with det +-1 whose first column is the primitive vector z."""
    a = [int(v) for v in z]
    n = len(a)
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def col_add(dst, src, q):
        for r in range(n):
            U[r][dst] += q * U[r][src]

    while sum(1 for v in a if v) > 1:
        p = min((i for i in range(n) if a[i]), key=lambda i: abs(a[i]))
        for i in range(n):
            if i != p and a[i]:
                q = a[i] // a[p]
                a[i] -= q * a[p]
                col_add(p, i, q)
    p = next(i for i in range(n) if a[i])
    if abs(a[p]) != 1:
        raise PreconditionError("coefficient vector is not primitive")
    if p:
        a[0], a[p] = a[p], a[0]
        for r in range(n):
            U[r][0], U[r][p] = U[r][p], U[r][0]
    if a[0] == -1:
        for r in range(n):
            U[r][0] = -U[r][0]
    M = np.array(U, dtype=np.int64)
    assert np.array_equal(M[:, 0], np.asarray(z, dtype=np.int64))
    return M


def _kz_transform(B: np.ndarray) -> np.ndarray:
    n = B.shape[1]
    if n == 1:
        return np.eye(1, dtype=np.int64)
    L = LatticeBasis(B)
    z = shortest_vector(L)["coefficients"]
    U = _complete_unimodular(z)
    C = B @ U
    v = C[:, 0]
    Q, _ = np.linalg.qr(np.column_stack([v, C[:, 1:]]))
    P = Q[:, 1:].T @ C[:, 1:]
    W = _kz_transform(P)
    U2 = np.eye(n, dtype=np.int64)
    U2[1:, 1:] = W
    U = U @ U2
    C = B @ U
    vv = float(v @ v)
    for i in range(1, n):
        q = round(float(C[:, i] @ v) / vv)
        if q:
            U[:, i] -= q * U[:, 0]
            C[:, i] -= q * v
    return U


def kz_basis(L: LatticeBasis) -> LatticeBasis:
    """Korkin-Zolotarev reduced basis via recursive exact SVP."""
    if L.n > MAX_KZ_DIM:
        raise CapacityError(f"KZ reduction is capped at n <= {MAX_KZ_DIM}")
    R = lll_basis(L)
    U = _kz_transform(R.basis.copy())
    return LatticeBasis(R.basis @ U)


def is_kz_reduced(L: LatticeBasis, tol: float = 1e-9) -> bool:
    """b_i is a shortest vector of the projection orthogonal to b_1..b_{i-1}, and size reduced."""
    if L.n > MAX_KZ_DIM:
        raise CapacityError(f"KZ audit is capped at n <= {MAX_KZ_DIM}")
    mu, bb = gram_schmidt(L.basis)
    n = L.n
    if any(abs(mu[i, j]) > 0.5 + tol for i in range(n) for j in range(i)):
        return False
    B = L.basis
    for i in range(n - 1):
        Q, _ = np.linalg.qr(B[:, :i]) if i else (np.zeros((n, 0)), None)
        P = B[:, i:] - Q @ (Q.T @ B[:, i:])
        Qc, _ = np.linalg.qr(P)
        proj = LatticeBasis(Qc.T @ P)
        if bb[i] > shortest_vector(proj)["N"] ** 2 * (1 + tol):
            return False
    return True


__all__ = [
    "LatticeBasis",
    "load_lattice",
    "integer_lattice",
    "d4_lattice",
    "e8_lattice",
    "dual_basis",
    "gram_schmidt",
    "lll_basis",
    "lovasz_audit",
    "shortest_vector",
    "babai_nearest_plane",
    "closest_vector",
    "torus_distance",
    "vectors_in_ball",
    "nearest_plane_radius",
    "DistanceTable",
    "distance_to_lattice",
    "relevant_vectors",
    "voronoi_vertices",
    "covering_radius_bracket",
    "kz_basis",
    "is_kz_reduced",
]
