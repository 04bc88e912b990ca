"""Cut-expansion certificates and cut-cone Poincare inequalities for c1.

Subsets of an n-point space are bitmasks.  Searches run vectorized over all
masks in floating point, and every optimum that is reported is re-evaluated
in exact rational arithmetic; near-ties are resolved exactly as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapacityError, PreconditionError, UnboundedError
from .finite_metric import FiniteMetric
from .serialize import fraction_str, parse_rational
from .transport import DiscreteMeasure

MAX_POINTS = 20
NEAR = 1e-9


@dataclass(frozen=True)
class PairDistribution:
    base: FiniteMetric
    sigma: DiscreteMeasure
    tau: tuple[tuple[int, int, Fraction], ...]

    def __post_init__(self):
        tau = tuple((int(i), int(j), parse_rational(w)) for i, j, w in self.tau)
        if any(w < 0 for _, _, w in tau):
            raise ValueError("tau weights must be nonnegative")
        if sum(w for _, _, w in tau) != 1:
            raise ValueError("tau weights must sum to one")
        n = self.base.n
        if any(not (0 <= i < n and 0 <= j < n) for i, j, _ in tau):
            raise ValueError("tau support outside the base space")
        if self.sigma.n != n:
            raise ValueError("sigma lives on a different space")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_matrix(cls, X: FiniteMetric, sigma: DiscreteMeasure, tau_matrix) -> "PairDistribution":
        entries = []
        for i, row in enumerate(tau_matrix):
            for j, w in enumerate(row):
                w = parse_rational(w)
                if w:
                    entries.append((i, j, w))
        return cls(X, sigma, tuple(entries))

    def to_dict(self) -> dict:
        return {"metric": self.base.to_dict(), "sigma": self.sigma.to_dict(),
                "tau": [{"i": i, "j": j, "weight": fraction_str(w)} for i, j, w in self.tau]}


def uniform_sigma(n: int) -> DiscreteMeasure:
    return DiscreteMeasure(n, tuple(Fraction(1, n) for _ in range(n)))


def edge_tau(n: int, edges: Sequence[tuple[int, int]]) -> tuple:
    """Uniform measure on both orientations of the given edges."""
    m = 2 * len(edges)
    out = []
    for i, j in edges:
        out.append((i, j, Fraction(1, m)))
        out.append((j, i, Fraction(1, m)))
    return tuple(out)


def product_tau(sigma: DiscreteMeasure) -> tuple:
    w = sigma.weights
    return tuple((i, j, w[i] * w[j]) for i in range(len(w)) for j in range(len(w)) if w[i] * w[j])


# ---------------------------------------------------------------- mask helpers

def _subset_sums(weights: Sequence, n: int, dtype=np.float64) -> np.ndarray:
    """sum of weights[i] over bits i of every mask 0..2^n-1."""
    out = np.zeros(1, dtype=dtype)
    for i in range(n):
        out = np.concatenate([out, out + weights[i]])
    return out


def _boundary(masks: np.ndarray, pairs: Sequence[tuple[int, int, object]], dtype=np.float64) -> np.ndarray:
    out = np.zeros(len(masks), dtype=dtype)
    for i, j, w in pairs:
        if i == j:
            continue
        cross = ((masks >> i) ^ (masks >> j)) & 1
        out += cross.astype(dtype) * (float(w) if dtype == np.float64 else w)
    return out


def _mask_members(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def exact_sigma(sigma: DiscreteMeasure, mask: int) -> Fraction:
    return sum((sigma.weights[i] for i in _mask_members(mask)), Fraction(0))


def exact_boundary(tau, mask: int) -> Fraction:
    return sum((w for i, j, w in tau if (mask >> i & 1) != (mask >> j & 1)), Fraction(0))


def exact_between(tau, A: int, B: int) -> Fraction:
    """tau mass of pairs with one end in A and the other in B (A, B disjoint)."""
    total = Fraction(0)
    for i, j, w in tau:
        if (A >> i & 1 and B >> j & 1) or (B >> i & 1 and A >> j & 1):
            total += w
    return total


# ---------------------------------------------------------------- expansion

def cut_expansion_alpha(pd: PairDistribution, delta, family: Sequence[int] | None = None) -> dict:
    """alpha = min tau(boundary A) / sigma(A) over delta <= sigma(A) <= 2/3.

    ``family`` optionally restricts the scan to given subset masks (for
    instance unions of orbits when sigma and tau are symmetric).
    """
    n = pd.base.n
    delta = parse_rational(delta)
    if family is None:
        if n > MAX_POINTS:
            raise CapacityError(f"subset enumeration is limited to {MAX_POINTS} points")
        masks = np.arange(1 << n, dtype=np.int64)
    else:
        masks = np.asarray(sorted(set(int(m) for m in family)), dtype=np.int64)
    sden = math.lcm(*(w.denominator for w in pd.sigma.weights))
    sint = [int(w * sden) for w in pd.sigma.weights]
    if family is None:
        s = _subset_sums(sint, n, np.int64)
    else:
        s = np.zeros(len(masks), dtype=np.int64)
        for i in range(n):
            s += ((masks >> i) & 1) * sint[i]
    lo = math.ceil(delta * sden)
    hi = math.floor(Fraction(2, 3) * sden)
    ok = (s >= lo) & (s <= hi) & (s > 0)
    if not ok.any():
        raise PreconditionError("no admissible subset: the expansion hypothesis is vacuous")
    cand = masks[ok]
    bnd = _boundary(cand, pd.tau)
    ratio = bnd / (s[ok] / sden)
    best = ratio.min()
    near = cand[ratio <= best * (1 + NEAR) + NEAR]
    exact = []
    for m in near.tolist():
        exact.append((exact_boundary(pd.tau, m) / exact_sigma(pd.sigma, m), m))
    alpha, witness = min(exact)
    return {"alpha": alpha, "witness_set": _mask_members(witness), "witness_mask": witness,
            "admissible": int(ok.sum())}


def pair_average(X: FiniteMetric, pairs) -> Fraction:
    M = X.exact_matrix()
    return sum((w * M[i][j] for i, j, w in pairs), Fraction(0))


@dataclass(frozen=True)
class ExpansionCertificate:
    alpha: Fraction
    delta: Fraction
    avg_sigma_dist: Fraction
    avg_tau_dist: Fraction
    diam: Fraction
    bound: Fraction
    raw: Fraction

    def to_dict(self) -> dict:
        out = {}
        for name in ("alpha", "delta", "avg_sigma_dist", "avg_tau_dist", "diam", "bound", "raw"):
            v = getattr(self, name)
            out[name] = {"exact": fraction_str(v), "decimal": float(v)}
        return out


def distributions_bound(pd: PairDistribution, delta, alpha=None, family=None) -> ExpansionCertificate:
    """c1 >= (alpha/2) (E_sigma d - 2 delta diam) / E_tau d, floored at 1."""
    delta = parse_rational(delta)
    if not 0 <= delta < Fraction(1, 3):
        raise ValueError("delta must lie in [0, 1/3)")
    if alpha is None:
        alpha = cut_expansion_alpha(pd, delta, family)["alpha"]
    alpha = parse_rational(alpha)
    avg_s = pair_average(pd.base, product_tau(pd.sigma))
    avg_t = pair_average(pd.base, pd.tau)
    if avg_t == 0:
        raise PreconditionError("tau is concentrated on the diagonal")
    diam = pd.base.exact_diam()
    raw = alpha / 2 * (avg_s - 2 * delta * diam) / avg_t
    return ExpansionCertificate(alpha, delta, avg_s, avg_t, diam, max(Fraction(1), raw), raw)


def greedy_core_subset(pd: PairDistribution, alpha, delta=None, seed: int = 0) -> dict:
    """Peel off poorly expanding pieces W until none is left; return the core.

    At each step the smallest W (then lexicographically first) inside the
    remaining set R with tau(W, R - W) < alpha sigma(W) <= (alpha/2) sigma(R)
    is removed.  The remaining core Y is then audited on random cuts.
    """
    n = pd.base.n
    if n > MAX_POINTS:
        raise CapacityError(f"greedy search is limited to {MAX_POINTS} points")
    alpha = parse_rational(alpha)
    full = (1 << n) - 1
    removed = 0
    pieces = []
    while True:
        R = full & ~removed
        if R == 0:
            break
        members = _mask_members(R)
        sub = np.arange(1, 1 << len(members), dtype=np.int64)
        # map compressed submasks to real masks
        real = np.zeros(len(sub), dtype=np.int64)
        for k, p in enumerate(members):
            real |= ((sub >> k) & 1) << p
        sig = np.zeros(len(real))
        for p in members:
            sig += ((real >> p) & 1) * float(pd.sigma.weights[p])
        between = np.zeros(len(real))
        for i, j, w in pd.tau:
            if i == j or not (R >> i & 1 and R >> j & 1):
                continue
            between += (((real >> i) ^ (real >> j)) & 1) * float(w)
        sR = float(exact_sigma(pd.sigma, R))
        a = float(alpha)
        maybe = (between < a * sig * (1 + NEAR) + NEAR) & (a * sig <= a / 2 * sR * (1 + NEAR) + NEAR)
        found = None
        if maybe.any():
            cands = real[maybe].tolist()
            cands.sort(key=lambda m: (m.bit_count(), _mask_members(m)))
            sRx = exact_sigma(pd.sigma, R)
            for m in cands:
                sw = exact_sigma(pd.sigma, m)
                if exact_between(pd.tau, m, R & ~m) < alpha * sw <= alpha / 2 * sRx:
                    found = m
                    break
        if found is None:
            break
        pieces.append(_mask_members(found))
        removed |= found
    Y = full & ~removed
    sigma_Y = exact_sigma(pd.sigma, Y)
    audit = audit_core(pd, Y, alpha, trials=100, seed=seed)
    out = {"Y": _mask_members(Y), "sigma_Y": sigma_Y, "removed": pieces,
           "subset_inequality_holds": audit}
    if delta is not None:
        out["coverage_holds"] = sigma_Y >= 1 - parse_rational(delta)
    return out


def audit_core(pd: PairDistribution, Y: int, alpha: Fraction, trials: int, seed: int) -> bool:
    """Check 2 sigma(A) sigma(Y - A) <= (2/alpha) tau(A, Y - A) for random cuts A of Y."""
    members = _mask_members(Y)
    if len(members) < 2:
        return True
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        pick = rng.random(len(members)) < 0.5
        A = sum(1 << p for p, b in zip(members, pick) if b)
        B = Y & ~A
        if A == 0 or B == 0:
            continue
        lhs = 2 * exact_sigma(pd.sigma, A) * exact_sigma(pd.sigma, B)
        rhs = 2 / alpha * exact_between(pd.tau, A, B)
        if lhs > rhs:
            return False
    return True


# ---------------------------------------------------------------- cut engine

def cut_poincare_engine(X: FiniteMetric, a, b) -> dict:
    """Best constant K with sum a|f(x)-f(y)| <= K sum b|f(x)-f(y)| for all L1 maps.

    By the cut-cone decomposition K is the worst ratio over single cuts.  The
    derived c1 lower bound is (sum a d) / (K sum b d).
    """
    n = X.n
    if n > MAX_POINTS:
        raise CapacityError(f"cut enumeration is limited to {MAX_POINTS} points")
    A = [[parse_rational(v) for v in row] for row in a]
    B = [[parse_rational(v) for v in row] for row in b]
    if any(v < 0 for row in A + B for v in row):
        raise ValueError("pair weights must be nonnegative")
    pa = [(i, j, A[i][j]) for i in range(n) for j in range(n) if A[i][j] and i != j]
    pb = [(i, j, B[i][j]) for i in range(n) for j in range(n) if B[i][j] and i != j]
    masks = np.arange(1, 1 << (n - 1), dtype=np.int64) << 1
    fa = _boundary(masks, pa)
    fb = _boundary(masks, pb)
    unb = (fb == 0) & (fa > 0)
    if unb.any():
        # confirm exactly before declaring the ratio unbounded
        for m in masks[unb].tolist():
            if exact_boundary(pb, m) == 0 and exact_boundary(pa, m) > 0:
                raise UnboundedError(f"cut {_mask_members(m)} separates a-mass but no b-mass")
    live = fb > 0
    if not live.any():
        raise UnboundedError("no cut carries b-mass")
    ratio = np.where(live, fa / np.where(live, fb, 1.0), -np.inf)
    best = ratio.max()
    near = masks[ratio >= best * (1 - NEAR) - NEAR]
    exact = []
    for m in near.tolist():
        eb = exact_boundary(pb, m)
        if eb:
            exact.append((exact_boundary(pa, m) / eb, -m))
    K, negm = max(exact)
    sa = pair_average(X, pa)
    sb = pair_average(X, pb)
    bound = sa / (K * sb) if K > 0 and sb > 0 else Fraction(0)
    return {"K": K, "witness_set": _mask_members(-negm), "bound": bound}


def quotient_cut_weights(action) -> tuple[list[list[Fraction]], list[list[Fraction]], list]:
    """Lifted pair weights on an orbit quotient of the cube.

    a(O, O') = mu(O) mu(O'), the uniform pair measure pushed to orbits;
    b(O, O') = (1/2) sum_j mu{x in O : x + e_j in O'}, the edge measure with the
    factor 1/2 of the discrete derivative.
    """
    d = action.d
    orbs = action.orbits()
    k = len(orbs)
    n = 1 << d
    lab = np.empty(n, dtype=np.int64)
    for i, o in enumerate(orbs):
        lab[list(o)] = i
    mu = [Fraction(len(o), n) for o in orbs]
    a = [[mu[i] * mu[j] for j in range(k)] for i in range(k)]
    counts = np.zeros((k, k), dtype=np.int64)
    x = np.arange(n)
    for j in range(d):
        np.add.at(counts, (lab, lab[x ^ (1 << j)]), 1)
    b = [[Fraction(int(counts[i, j]), 2 * n) for j in range(k)] for i in range(k)]
    return a, b, orbs
