"""Spectral bookkeeping around noise stability, juntas and level-1 weight.

Functions are Boolean tables on F_2^d, either {0,1}-valued or
{-1,1}-valued; the convention is detected from the values or passed
explicitly.  Every quantity is an exact scan over the 2^d Walsh
coefficients, so d is capped at 16.  Unknown universal constants are
parameters, and each report also gives the constant that would make the
corresponding bound an equality for the given function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import sampling
from .errors import CapacityError, PreconditionError
from .fourier_cube import SpectralFunction, fwht, popcounts, require_coeffs
from .tolerances import IDENTITY_TOL, MEASURE_SUM_TOL

MAX_SPECTRUM_DIM = 16
ZERO_ONE = "zero_one"
PLUS_MINUS = "plus_minus"


def boolean_convention(f: SpectralFunction, convention: str | None = None) -> str:
    if f.dim > MAX_SPECTRUM_DIM:
        raise CapacityError(f"spectral scans are capped at d <= {MAX_SPECTRUM_DIM}")
    if f.range_dim != 1:
        raise PreconditionError("f must be scalar valued")
    vals = set(np.unique(f.scalar_values()).tolist())
    if convention is None:
        if vals <= {0.0, 1.0}:
            return ZERO_ONE
        if vals <= {-1.0, 1.0}:
            return PLUS_MINUS
        raise PreconditionError("f is not Boolean")
    allowed = {0.0, 1.0} if convention == ZERO_ONE else {-1.0, 1.0} if convention == PLUS_MINUS else None
    if allowed is None:
        raise ValueError(f"unknown convention {convention!r}")
    if not vals <= allowed:
        raise PreconditionError(f"f is not Boolean in the {convention} convention")
    return convention


def to_zero_one(f: SpectralFunction) -> SpectralFunction:
    """(1 + f) / 2 for a {-1,1} function."""
    boolean_convention(f, PLUS_MINUS)
    return SpectralFunction.from_values((1.0 + f.scalar_values()) / 2.0, f.dim)


def to_plus_minus(f: SpectralFunction) -> SpectralFunction:
    boolean_convention(f, ZERO_ONE)
    return SpectralFunction.from_values(2.0 * f.scalar_values() - 1.0, f.dim)


def _spectrum(f: SpectralFunction) -> tuple[np.ndarray, np.ndarray]:
    c = require_coeffs(f)[:, 0]
    return c * c, popcounts(f.dim)


def _mask(coords) -> int:
    m = 0
    for j in coords:
        m |= 1 << (int(j) - 1)
    return m


def coordinate_weights(f: SpectralFunction, k: float, strict: bool = False) -> np.ndarray:
    """w_j = sum of f^(A)^2 over A containing j with |A| <= k (or < k if strict)."""
    sq, pc = _spectrum(f)
    keep = pc < k if strict else pc <= k
    A = np.arange(1 << f.dim)
    return np.array([float(np.sum(sq[keep & ((A >> j) & 1 == 1)])) for j in range(f.dim)])


@dataclass(frozen=True)
class SpectralProfile:
    dim: int
    k: float
    beta: float
    epsilon: float | None
    convention: str
    delta: float
    low_mass: float
    mass: float
    J_beta: tuple
    gamma: float
    rho: tuple  # (r, rho_r) for r = 1, 2, ...
    junta_bound: float | None

    def to_dict(self) -> dict:
        return {
            "d": self.dim,
            "k": self.k,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "convention": self.convention,
            "delta": self.delta,
            "low_mass": self.low_mass,
            "mass": self.mass,
            "J_beta": list(self.J_beta),
            "gamma": self.gamma,
            "rho_r": {str(r): v for r, v in self.rho},
            "junta_bound": self.junta_bound,
        }


def profile(f: SpectralFunction, k: float, beta: float, epsilon: float | None = None,
            convention: str | None = None) -> SpectralProfile:
    """High mass delta, the heavy coordinate set J_beta, gamma and its dyadic shells.

    rho_r collects the low-degree sets A (|A| < k) with 2^{r-1} <= |A \\ J_beta| < 2^r,
    so the shells sum to gamma.
    """
    conv = boolean_convention(f, convention)
    if not 0 < beta:
        raise ValueError("beta must be positive")
    sq, pc = _spectrum(f)
    delta = float(np.sum(sq[pc >= k]))
    low = float(np.sum(sq[pc < k]))
    mass = float(np.mean(f.scalar_values() ** 2))
    if abs(delta + low - mass) > MEASURE_SUM_TOL * max(1.0, mass) * 10:
        raise AssertionError("Parseval split failed")
    w = coordinate_weights(f, k)
    J = tuple(j + 1 for j in range(f.dim) if w[j] >= beta)
    jm = _mask(J)
    A = np.arange(1 << f.dim)
    outside = np.bitwise_count((A & ~jm).astype(np.uint64)).astype(np.int64)
    low_out = (pc < k) & (outside > 0)
    gamma = float(np.sum(sq[low_out]))
    rho = []
    r = 1
    while (1 << (r - 1)) <= max(int(outside.max()), 1):
        sel = low_out & (outside >= 1 << (r - 1)) & (outside < 1 << r)
        rho.append((r, float(np.sum(sq[sel]))))
        r += 1
    if abs(math.fsum(v for _, v in rho) - gamma) > 1e-12:
        raise AssertionError("dyadic shells do not sum to gamma")
    # beta |J| <= sum_j w_j = sum_{|A| <= k} |A| f^(A)^2 <= k * mass
    if beta * len(J) > k * mass * (1 + 1e-12):
        raise AssertionError("heavy coordinate count exceeds k / beta")
    jb = None if epsilon is None else 1.0 / (epsilon * beta)
    return SpectralProfile(f.dim, k, beta, epsilon, conv, delta, low, mass, J, gamma, tuple(rho), jb)


def bourgain_rhs(prof: SpectralProfile, C: float) -> float:
    """C^{sqrt(log2(2/delta) log2 log2 k)} (delta sqrt(k) + 4^k sqrt(beta))."""
    expo = _bourgain_exponent(prof)
    return C ** expo * (prof.delta * math.sqrt(prof.k) + 4.0 ** prof.k * math.sqrt(prof.beta))


def _bourgain_exponent(prof: SpectralProfile) -> float:
    if prof.delta <= 0 or prof.k <= 2:
        return 0.0
    return math.sqrt(math.log2(2 / prof.delta) * math.log2(math.log2(prof.k)))


def empirical_bourgain_constant(prof: SpectralProfile) -> float | None:
    """Least C >= 1 with gamma <= bourgain_rhs(prof, C); None if C = 1 already suffices."""
    base = bourgain_rhs(prof, 1.0)
    if prof.gamma <= base:
        return None
    e = _bourgain_exponent(prof)
    return math.inf if e == 0 or base == 0 else (prof.gamma / base) ** (1 / e)


def junta_projection(f: SpectralFunction, J) -> dict:
    """Keep the Walsh terms supported inside J; that is the conditional expectation onto J."""
    c = require_coeffs(f)
    jm = _mask(J)
    A = np.arange(1 << f.dim)
    inside = (A & ~jm) == 0
    gc = np.where(inside[:, None], c, 0.0)
    g = SpectralFunction.from_coeffs(gc, f.dim)
    sq = np.sum(c * c, axis=1)
    spectral = float(np.sum(sq[~inside]))
    pointwise = float(np.mean(np.sum((f.values - g.values) ** 2, axis=1)))
    return {"g": g, "J": sorted(int(j) for j in J), "l2_distance": spectral, "pointwise": pointwise,
            "residual": abs(spectral - pointwise)}


def rademacher_level1_check(f: SpectralFunction, p: float) -> dict:
    """sqrt(p - 1) |level-1 coefficients| <= ||f||_p for centred f."""
    if not 1 <= p <= 2:
        raise ValueError("p must lie in [1, 2]")
    c = require_coeffs(f)[:, 0]
    if abs(c[0]) > IDENTITY_TOL * max(1.0, float(np.max(np.abs(f.scalar_values())))):
        raise PreconditionError("f must have mean zero")
    level1 = [1 << j for j in range(f.dim)]
    lhs = math.sqrt(p - 1) * math.sqrt(float(np.sum(c[level1] ** 2)))
    rhs = float(np.mean(np.abs(f.scalar_values()) ** p)) ** (1 / p)
    return {"lhs": lhs, "rhs": rhs, "p": p, "holds": lhs <= rhs + IDENTITY_TOL}


def _level1_slices(f: SpectralFunction, I: list[int]) -> np.ndarray:
    """F[i, y] = f^_y({i}) for i in I and y ranging over F_2^J (points with x_I = 0)."""
    c = require_coeffs(f)[:, 0]
    im = _mask(I)
    A = np.arange(1 << f.dim)
    ys = A[(A & im) == 0]
    rows = []
    for i in I:
        sel = (A & im) == (1 << (i - 1))
        rows.append(fwht(np.where(sel, c, 0.0))[ys])
    return np.array(rows).reshape(len(I), len(ys))


def lemma_step_components(f: SpectralFunction, I, t: float, p: float, k: int,
                          beta: float | None = None, delta: float | None = None,
                          samples: int = 20000, seed: int | None = None) -> dict:
    """Both sides of the level-1 random restriction estimate for a {0,1} function.

    I is a set of coordinates and J its complement.  beta and delta default
    to the smallest values for which the hypotheses hold.  Selector
    expectations linear in the selectors use 1 - (1 - t)^{|A cap I|}; the
    (p/2)-power term is sampled.
    """
    boolean_convention(f, ZERO_ONE)
    if not (0 < t < 1 and 1 < p <= 2):
        raise ValueError("need t in (0, 1) and p in (1, 2]")
    seed = sampling.default_seed() if seed is None else seed
    d = f.dim
    I = sorted(int(i) for i in I)
    if not I or any(not 1 <= i <= d for i in I) or len(set(I)) != len(I):
        raise PreconditionError("I must be a nonempty set of coordinates")
    sq, pc = _spectrum(f)
    A = np.arange(1 << d)
    im = _mask(I)
    inI = np.bitwise_count((A & im).astype(np.uint64)).astype(np.int64)

    per_i = coordinate_weights(f, k, strict=True)[[i - 1 for i in I]]
    high = float(np.sum(sq[pc >= k]))
    beta = float(per_i.max()) if beta is None else beta
    delta = high if delta is None else delta
    hyp_beta = bool(np.all(per_i <= beta + 1e-15))
    hyp_delta = high <= delta + 1e-15

    q = (p - 1) ** (p / 2)
    lhs = t ** (p / 2) * float(np.sum(sq[inI == 1]))
    low_I = inI < k
    rhs_terms = {
        "linear": 2 * t / q * float(np.sum(inI[low_I] * sq[low_I])),
        "high": 2 * delta / q,
        "beta": (3.0 ** (k + 2) * math.sqrt(beta)) ** (p / 2),
        "noise": (8 * t * delta) ** (p / 2),
    }
    rhs = math.fsum(rhs_terms.values())

    # intermediate form: selector expectation of the restricted mass
    first = 2 / q * float(np.sum((1 - (1 - t) ** inI) * sq))
    F2 = _level1_slices(f, I) ** 2
    vals = []
    for b, size in sampling.blocks(samples):
        s = sampling.block_rng(seed, "lemma-step", b).random((size, len(I))) < (1 - t)
        centred = s.astype(np.float64) - (1 - t)
        vals.append(np.mean(np.abs(centred @ F2) ** (p / 2), axis=1))
    vals = np.concatenate(vals)
    power = float(vals.mean())
    power_ci = sampling.normal_halfwidth(vals)
    power_bound = (8 * 3.0 ** k * math.sqrt(beta) + 8 * t * delta) ** (p / 2)
    return {
        "I": I,
        "t": t,
        "p": p,
        "k": k,
        "beta": beta,
        "delta": delta,
        "hypotheses": {"beta": hyp_beta, "delta": hyp_delta},
        "lhs": lhs,
        "rhs": rhs,
        "rhs_terms": rhs_terms,
        "selector_first_term": first,
        "selector_power_term": power,
        "selector_power_ci99": power_ci,
        "selector_power_bound": power_bound,
        "intermediate_holds": lhs <= first + power + power_ci + IDENTITY_TOL,
        "holds": lhs <= rhs + IDENTITY_TOL,
    }


DISTRIBUTIONS = ("rademacher", "uniform", "gaussian", "zero")


def symmetrization_check(distribution: str, n: int, trials: int = 10000, seed: int | None = None) -> dict:
    """E|X_1 + ... + X_n| <= 2 E sqrt(X_1^2 + ... + X_n^2) for independent centred X_j."""
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
    seed = sampling.default_seed() if seed is None else seed
    rows = []
    for b, size in sampling.blocks(trials):
        rng = sampling.block_rng(seed, "symmetrization-" + distribution, b)
        if distribution == "rademacher":
            X = rng.integers(0, 2, size=(size, n)) * 2.0 - 1.0
        elif distribution == "uniform":
            X = rng.uniform(-1.0, 1.0, size=(size, n))
        elif distribution == "gaussian":
            X = rng.normal(size=(size, n))
        else:
            X = np.zeros((size, n))
        rows.append(X)
    X = np.vstack(rows)
    a = np.abs(X.sum(axis=1))
    b = 2 * np.sqrt(np.sum(X * X, axis=1))
    ci = sampling.normal_halfwidth(a) + sampling.normal_halfwidth(b) if trials > 1 else 0.0
    return {"lhs": float(a.mean()), "rhs": float(b.mean()), "ci99": ci,
            "holds": float(a.mean()) <= float(b.mean()) + ci}


def high_mass_step(f: SpectralFunction, epsilon: float, delta: float | None = None) -> dict:
    """From noise stability 1 - delta to high-degree mass at most 2 delta."""
    boolean_convention(f, PLUS_MINUS)
    sq, pc = _spectrum(f)
    stable = float(np.sum((1 - epsilon) ** pc * sq))
    delta = max(0.0, 1.0 - stable) if delta is None else delta
    high = float(np.sum(sq[pc >= 1 / epsilon - 1e-12]))
    return {
        "noise_mass": stable,
        "delta": delta,
        "hypothesis": stable >= 1 - delta - 1e-15,
        "high_mass": high,
        "e_factor_bound": delta / (1 - math.exp(-1)),
        "holds": high <= 2 * delta + 1e-12,
    }


def derive_sensitive(f: SpectralFunction, epsilon: float, beta: float, c: float = 1.0,
                     delta: float | None = None) -> dict:
    """Approximating junta for a noise-stable {-1,1} function, with the bound it must satisfy.

    J_beta uses k = 1/epsilon on the spectrum of f itself, so |J_beta| <= 1/(epsilon beta).
    The bound is 2^{c sqrt(log2(1/delta) log2 log2(1/epsilon))} (delta/sqrt(epsilon) + 4^{1/epsilon} sqrt(beta)).
    """
    boolean_convention(f, PLUS_MINUS)
    k = 1.0 / epsilon
    step = high_mass_step(f, epsilon, delta)
    delta = step["delta"]
    w = coordinate_weights(f, k)
    J = [j + 1 for j in range(f.dim) if w[j] >= beta]
    proj = junta_projection(f, J)
    dist = proj["l2_distance"]
    if delta > 0 and k > 2:
        s = math.sqrt(max(0.0, math.log2(1 / delta)) * math.log2(math.log2(k)))
    else:
        s = 0.0
    base = delta / math.sqrt(epsilon) + 4.0 ** k * math.sqrt(beta)
    rhs = 2.0 ** (c * s) * base
    if dist == 0:
        c_hat = None
    elif base == 0 or s == 0:
        c_hat = math.inf if dist > base else None
    else:
        c_hat = math.log2(dist / base) / s
    return {
        "epsilon": epsilon,
        "beta": beta,
        "delta": delta,
        "noise_mass": step["noise_mass"],
        "high_mass": step["high_mass"],
        "high_mass_step_holds": step["holds"],
        "J_beta": J,
        "junta_size": len(J),
        "junta_bound": 1 / (epsilon * beta),
        "junta_holds": len(J) <= 1 / (epsilon * beta) + 1e-9,
        "g": proj["g"],
        "l2_distance": dist,
        "c": c,
        "rhs": rhs,
        "bound_holds": dist <= rhs + IDENTITY_TOL,
        "c_hat": c_hat,
        "in_regime": 0 < epsilon < 0.1 and 0 < delta < 0.1,
    }


def dictator(d: int, j: int = 1, convention: str = ZERO_ONE) -> SpectralFunction:
    x = (np.arange(1 << d) >> (j - 1)) & 1
    vals = x.astype(np.float64) if convention == ZERO_ONE else 1.0 - 2.0 * x
    return SpectralFunction.from_values(vals, d)


def parity(d: int, convention: str = PLUS_MINUS) -> SpectralFunction:
    x = popcounts(d) & 1
    vals = x.astype(np.float64) if convention == ZERO_ONE else 1.0 - 2.0 * x
    return SpectralFunction.from_values(vals, d)


def majority(d: int, convention: str = ZERO_ONE) -> SpectralFunction:
    if d % 2 == 0:
        raise ValueError("majority needs an odd number of coordinates")
    x = (popcounts(d) > d // 2).astype(np.float64)
    return SpectralFunction.from_values(x if convention == ZERO_ONE else 1.0 - 2.0 * x, d)


def tribes(width: int, count: int, convention: str = PLUS_MINUS) -> SpectralFunction:
    """OR of ``count`` disjoint ANDs of ``width`` coordinates."""
    d = width * count
    A = np.arange(1 << d)
    block = (1 << width) - 1
    x = np.zeros(1 << d, dtype=bool)
    for b in range(count):
        x |= ((A >> (b * width)) & block) == block
    x = x.astype(np.float64)
    return SpectralFunction.from_values(x if convention == ZERO_ONE else 1.0 - 2.0 * x, d)


def random_boolean(d: int, rng: np.random.Generator, convention: str = ZERO_ONE, p: float = 0.5) -> SpectralFunction:
    x = (rng.random(1 << d) < p).astype(np.float64)
    return SpectralFunction.from_values(x if convention == ZERO_ONE else 1.0 - 2.0 * x, d)


__all__ = [
    "ZERO_ONE",
    "PLUS_MINUS",
    "boolean_convention",
    "to_zero_one",
    "to_plus_minus",
    "coordinate_weights",
    "SpectralProfile",
    "profile",
    "bourgain_rhs",
    "empirical_bourgain_constant",
    "junta_projection",
    "rademacher_level1_check",
    "lemma_step_components",
    "symmetrization_check",
    "high_mass_step",
    "derive_sensitive",
    "dictator",
    "parity",
    "majority",
    "tribes",
    "random_boolean",
]
