"""Walsh analysis on the Boolean cube F_2^d.

Points are integer bitmasks; coordinate ``j`` (1-based) is bit ``j - 1``.
Functions are stored as dense ``(2**d, m)`` float tables, so a scalar
function has ``m == 1``.  Frequencies are bitmasks as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import sampling
from .errors import CapacityError, PreconditionError
from .tolerances import (
    IDENTITY_TOL,
    INEQUALITY_SLACK,
    MAX_DENSE_DIM,
    MEASURE_SUM_TOL,
)


def popcounts(d: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << d, dtype=np.uint64)).astype(np.int64)


def fwht(table: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterfly along axis 0 (returns a copy)."""
    a = np.array(table, dtype=np.float64, copy=True)
    n = a.shape[0]
    d = n.bit_length() - 1
    if n != 1 << d:
        raise ValueError("length must be a power of two")
    tail = a.shape[1:]
    h = 1
    for _ in range(d):
        v = a.reshape((n // (2 * h), 2, h) + tail)
        lo = v[:, 0].copy()
        hi = v[:, 1]
        v[:, 0] += hi
        v[:, 1] = lo - hi
        h *= 2
    return a


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _as_table(values, dim: int | None) -> tuple[np.ndarray, int]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("values must be a vector or a (2^d, m) table")
    n = arr.shape[0]
    d = n.bit_length() - 1
    if n != 1 << d:
        raise ValueError("table length must be a power of two")
    if dim is not None and dim != d:
        raise ValueError(f"table length {n} does not match dim {dim}")
    if d > MAX_DENSE_DIM:
        raise CapacityError(f"dense tables are capped at d = {MAX_DENSE_DIM}")
    return arr, d


@dataclass(frozen=True)
class SpectralFunction:
    """A function F_2^d -> R^m with an optional Walsh coefficient table."""

    dim: int
    values: np.ndarray
    coeffs: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", _freeze(self.coeffs))

    @classmethod
    def from_values(cls, values, dim: int | None = None) -> "SpectralFunction":
        arr, d = _as_table(values, dim)
        return cls(d, arr)

    @classmethod
    def from_coeffs(cls, coeffs, dim: int | None = None) -> "SpectralFunction":
        arr, d = _as_table(coeffs, dim)
        return cls(d, fwht(arr), arr)

    @property
    def range_dim(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return 1 << self.dim

    def scalar_values(self) -> np.ndarray:
        if self.range_dim != 1:
            raise ValueError("function is vector-valued")
        return self.values[:, 0]

    def scalar_coeffs(self) -> np.ndarray:
        c = require_coeffs(self)
        if self.range_dim != 1:
            raise ValueError("function is vector-valued")
        return c[:, 0]

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "range_dim": self.range_dim, "values": self.values}
        if self.coeffs is not None:
            out["coeffs"] = self.coeffs
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SpectralFunction":
        d = int(obj["dim"])
        m = int(obj.get("range_dim", 1))
        if "values" in obj:
            vals = np.array(obj["values"], dtype=np.float64).reshape(1 << d, m)
            coeffs = obj.get("coeffs")
            if coeffs is None:
                return cls(d, vals)
            return cls(d, vals, np.array(coeffs, dtype=np.float64).reshape(1 << d, m))
        return cls.from_coeffs(np.array(obj["coeffs"], dtype=np.float64).reshape(1 << d, m), d)


def walsh_function(d: int, A: int) -> SpectralFunction:
    """W_A(x) = (-1)^{popcount(x & A)}."""
    x = np.arange(1 << d, dtype=np.uint64)
    vals = 1.0 - 2.0 * (np.bitwise_count(x & np.uint64(A)) & 1)
    coeffs = np.zeros(1 << d)
    coeffs[A] = 1.0
    return SpectralFunction(d, vals[:, None], coeffs[:, None])


def walsh_transform(f: SpectralFunction) -> SpectralFunction:
    if f.dim > MAX_DENSE_DIM:
        raise CapacityError(f"dense transform is capped at d = {MAX_DENSE_DIM}")
    coeffs = fwht(f.values) / f.size
    return SpectralFunction(f.dim, f.values, coeffs)


def inverse_transform(coeffs: np.ndarray) -> np.ndarray:
    return fwht(coeffs)


def require_coeffs(f: SpectralFunction) -> np.ndarray:
    if f.coeffs is None:
        return walsh_transform(f).coeffs
    return f.coeffs


def check_consistency(f: SpectralFunction, tol: float = IDENTITY_TOL) -> dict:
    """Round-trip and Parseval residuals of a function with coefficients."""
    c = require_coeffs(f)
    round_trip = float(np.max(np.abs(inverse_transform(c) - f.values)))
    energy = float(np.mean(np.sum(f.values**2, axis=1)))
    spectral = float(np.sum(c**2))
    parseval = abs(energy - spectral)
    return {
        "round_trip": round_trip,
        "parseval": parseval,
        "ok": round_trip <= tol * max(1.0, float(np.max(np.abs(f.values))))
        and parseval <= tol * max(1.0, energy),
    }


def _check_coord(f: SpectralFunction, j: int) -> None:
    if not 1 <= j <= f.dim:
        raise ValueError(f"coordinate {j} out of range 1..{f.dim}")


def partial_derivative(f: SpectralFunction, j: int) -> SpectralFunction:
    """(d_j f)(x) = (f(x + e_j) - f(x)) / 2."""
    _check_coord(f, j)
    idx = np.arange(f.size) ^ (1 << (j - 1))
    vals = (f.values[idx] - f.values) / 2.0
    coeffs = None
    if f.coeffs is not None:
        has_j = ((np.arange(f.size) >> (j - 1)) & 1).astype(bool)
        coeffs = np.where(has_j[:, None], -f.coeffs, 0.0)
    return SpectralFunction(f.dim, vals, coeffs)


def derivative_energy(f: SpectralFunction) -> float:
    """sum_j of the mean of ||d_j f||^2, evaluated pointwise."""
    total = 0.0
    for j in range(1, f.dim + 1):
        total += float(np.mean(np.sum(partial_derivative(f, j).values ** 2, axis=1)))
    return total


def spectral_energy(f: SpectralFunction) -> float:
    """sum_A |A| ||f^(A)||^2."""
    c = require_coeffs(f)
    return float(np.sum(popcounts(f.dim) * np.sum(c**2, axis=1)))


def _boolean_table(f: SpectralFunction) -> np.ndarray:
    if f.range_dim != 1:
        raise PreconditionError("set indicator must be scalar")
    v = f.values[:, 0]
    if not np.all((v == 0.0) | (v == 1.0)):
        raise PreconditionError("indicator values must be 0 or 1")
    return v.astype(bool)


def influence(A: SpectralFunction, j: int) -> float:
    """Probability that flipping coordinate j changes membership in A."""
    _check_coord(A, j)
    v = _boolean_table(A)
    idx = np.arange(A.size) ^ (1 << (j - 1))
    return float(np.mean(v != v[idx]))


def influences(A: SpectralFunction) -> np.ndarray:
    return np.array([influence(A, j) for j in range(1, A.dim + 1)])


def indicator(d: int, members) -> SpectralFunction:
    """Indicator of a set given as a boolean table or an iterable of masks."""
    arr = np.asarray(members)
    if arr.dtype == bool and arr.shape == (1 << d,):
        vals = arr.astype(np.float64)
    else:
        vals = np.zeros(1 << d)
        vals[np.asarray(list(members), dtype=np.int64)] = 1.0
    return SpectralFunction(d, vals[:, None])


def noise_weighted_mass(f: SpectralFunction, q: float) -> float:
    """sum_A q^|A| ||f^(A)||^2."""
    c = require_coeffs(f)
    return float(np.sum(np.power(float(q), popcounts(f.dim)) * np.sum(c**2, axis=1)))


def min_frequency(f: SpectralFunction, tol: float = IDENTITY_TOL) -> int | None:
    """Smallest |A| > 0 with a nonzero coefficient, or None for constants."""
    c = require_coeffs(f)
    pc = popcounts(f.dim)
    nz = (np.max(np.abs(c), axis=1) > tol) & (pc > 0)
    if not nz.any():
        return None
    return int(pc[nz].min())


def pair_variance(values: np.ndarray) -> float:
    """Mean of ||f(x) - f(y)||^2 over independent uniform x, y."""
    mean = values.mean(axis=0)
    return float(2.0 * np.mean(np.sum((values - mean) ** 2, axis=1)))


def poincare_check(f: SpectralFunction) -> dict:
    """Spectral-gap Poincare inequality with the gap read off the spectrum."""
    c = require_coeffs(f)
    m = min_frequency(f)
    if m is None:
        raise PreconditionError("constant function has no nonzero frequency")
    lhs = pair_variance(f.values)
    rhs = 2.0 / m * derivative_energy(f)
    nonconst = 2.0 * float(np.sum(c[1:] ** 2))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "min_freq": m,
        "identity_residual": abs(lhs - nonconst),
        "holds": lhs <= rhs + IDENTITY_TOL,
    }


def enflo_lower_bound(d: int) -> float:
    if d < 1:
        raise ValueError("d must be positive")
    return math.sqrt(d)


def enflo_gap(f: SpectralFunction) -> dict:
    """Diagonal-versus-edges inequality: antipodal energy <= 4 * edge energy."""
    full = f.size - 1
    lhs = float(np.mean(np.sum((f.values - f.values[np.arange(f.size) ^ full]) ** 2, axis=1)))
    rhs = 4.0 * derivative_energy(f)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + INEQUALITY_SLACK * max(1.0, rhs)}


def biased_weights(d: int, epsilon: float) -> np.ndarray:
    """Point masses of the product measure with P(x_j = 1) = epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    pc = popcounts(d)
    w = np.power(epsilon, pc) * np.power(1.0 - epsilon, d - pc)
    if abs(w.sum() - 1.0) > MEASURE_SUM_TOL:
        raise ArithmeticError("biased weights do not sum to one")
    return w


def biased_expectation(f: SpectralFunction, epsilon: float) -> np.ndarray:
    return biased_weights(f.dim, epsilon) @ f.values


def sampled_influences(
    predicate: Callable[[np.ndarray], np.ndarray],
    d: int,
    samples: int,
    seed: int,
) -> dict:
    """Monte Carlo influences for a set given as a vectorized membership test.

    Works for any ``d <= 63``; each estimate carries a 99% Hoeffding half-width.
    """
    if d > 63:
        raise CapacityError("bitmask points are limited to 63 coordinates")

    def run(block):
        b, size = block
        rng = sampling.block_rng(seed, "influence", b)
        x = rng.integers(0, 1 << d, size=size, dtype=np.uint64) if d < 63 else (
            rng.integers(0, 1 << 62, size=size, dtype=np.uint64) * 2
            + rng.integers(0, 2, size=size, dtype=np.uint64))
        base = np.asarray(predicate(x), dtype=bool)
        counts = np.empty(d)
        for j in range(d):
            counts[j] = np.count_nonzero(base != np.asarray(predicate(x ^ np.uint64(1 << j)), dtype=bool))
        return counts

    parts = sampling.ordered_map(run, sampling.blocks(samples))
    total = np.sum(np.stack(parts), axis=0)
    return {
        "influences": total / samples,
        "ci99": sampling.hoeffding_halfwidth(samples, 1.0),
        "samples": samples,
    }
