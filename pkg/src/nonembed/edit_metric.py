"""Insertion/deletion edit distance on binary strings and the shift noise model.

A string of length ``n`` is a pair ``(bits, n)`` where character ``i`` is bit
``i`` of the integer.  ``"0001"`` therefore has bits ``0b1000``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from . import fourier_cube as fc
from . import sampling
from .errors import CapacityError, PreconditionError
from .tolerances import IDENTITY_TOL, SPECTRAL_RESIDUAL_TOL

MAX_LENGTH = 1 << 16


@dataclass(frozen=True)
class BinaryString:
    bits: int
    length: int

    def __post_init__(self):
        if not 0 <= self.length <= MAX_LENGTH:
            raise ValueError("length out of range")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError("bits do not fit in the length")

    @classmethod
    def parse(cls, s: str) -> "BinaryString":
        if set(s) - {"0", "1"}:
            raise ValueError("binary strings use the characters 0 and 1")
        return cls(sum(1 << i for i, ch in enumerate(s) if ch == "1"), len(s))

    def __str__(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.length))

    def popcount(self) -> int:
        return self.bits.bit_count()


def _coerce(x) -> BinaryString:
    return BinaryString.parse(x) if isinstance(x, str) else x


def lcs_dp(x, y) -> int:
    """Longest common subsequence by the quadratic table."""
    x, y = str(_coerce(x)), str(_coerce(y))
    prev = [0] * (len(y) + 1)
    for a in x:
        cur = [0]
        for j, b in enumerate(y):
            cur.append(prev[j] + 1 if a == b else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def lcs_bits(xb: int, n: int, yb: int, m: int) -> int:
    """Longest common subsequence with the bit-parallel row recurrence."""
    if n == 0 or m == 0:
        return 0
    full = (1 << n) - 1
    ones = xb
    zeros = full ^ xb
    v = full
    for j in range(m):
        u = v & (ones if yb >> j & 1 else zeros)
        v = ((v + u) | (v - u)) & full
    return n - v.bit_count()


def edit_distance_dp(x, y) -> int:
    x, y = _coerce(x), _coerce(y)
    return x.length + y.length - 2 * lcs_dp(x, y)


def edit_distance(x, y) -> int:
    """ED(x, y) = |x| + |y| - 2 LCS(x, y) with insertions and deletions only."""
    x, y = _coerce(x), _coerce(y)
    return x.length + y.length - 2 * lcs_bits(x.bits, x.length, y.bits, y.length)


def _neighbors(bits: int, n: int):
    for i in range(n):
        low = bits & ((1 << i) - 1)
        yield low | ((bits >> (i + 1)) << i), n - 1
    for i in range(n + 1):
        low = bits & ((1 << i) - 1)
        high = (bits >> i) << (i + 1)
        yield low | high, n + 1
        yield low | high | (1 << i), n + 1


def edit_distance_bfs(x, y) -> int:
    """Breadth-first search in the single insert/delete graph (oracle)."""
    x, y = _coerce(x), _coerce(y)
    if x.length + y.length > 16:
        raise CapacityError("BFS oracle is limited to short strings")
    start = (x.bits, x.length)
    goal = (y.bits, y.length)
    limit = x.length + y.length
    seen = {start: 0}
    q = deque([start])
    while q:
        node = q.popleft()
        if node == goal:
            return seen[node]
        for nb in _neighbors(*node):
            if nb[1] <= limit and nb not in seen:
                seen[nb] = seen[node] + 1
                q.append(nb)
    raise ArithmeticError("target unreachable")


def rotate(bits, d: int, j: int):
    """Cyclic shift S^j on d-bit masks; works on ints and integer arrays."""
    j %= d
    if j == 0:
        return bits
    mask = (1 << d) - 1
    return ((bits << j) | (bits >> (d - j))) & mask


def cyclic_shift(x, j: int = 1) -> BinaryString:
    """S(x_1, ..., x_d) = (x_d, x_1, ..., x_{d-1}), applied j times."""
    x = _coerce(x)
    if x.length == 0:
        return x
    return BinaryString(rotate(x.bits, x.length, j), x.length)


def ball_count_check(d: int, r: int) -> dict:
    """Count strings of length d at edit distance exactly r from every center."""
    if d > 10 or r > 4:
        raise CapacityError("ball counts are enumerated for d <= 10 and r <= 4")
    bound = 2**r * math.comb(2 * d, r)
    worst = 0
    for center in range(1 << d):
        seen = {(center, d)}
        frontier = [(center, d)]
        for _ in range(r):
            nxt = []
            for node in frontier:
                for nb in _neighbors(*node):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
            frontier = nxt
        count = sum(1 for b, n in frontier if n == d)
        worst = max(worst, count)
    return {"d": d, "r": r, "max_count": worst, "bound": bound, "holds": worst <= bound}


def _random_strings(rng: np.random.Generator, size: int, d: int, p: float = 0.5) -> list[int]:
    bits = rng.random((size, d)) < p
    weights = [1 << i for i in range(d)]
    return [sum(w for w, b in zip(weights, row) if b) for row in bits.tolist()]


def average_ed_estimate(d: int, samples: int, seed: int) -> dict:
    """Mean edit distance between uniform strings of length d.

    Exhaustive (exact) when 4^d <= samples, otherwise Monte Carlo with a 99%
    Hoeffding interval over the range [0, 2d].
    """
    if samples < 100:
        raise ValueError("at least 100 samples are required")
    bound = d / 160
    if 4**d <= samples:
        total = 0
        for x in range(1 << d):
            for y in range(1 << d):
                total += edit_distance(BinaryString(x, d), BinaryString(y, d))
        mean = Fraction(total, 4**d)
        return {"d": d, "samples": 4**d, "mean": float(mean), "exact_mean": mean,
                "ci99": 0.0, "bound": bound, "pass": float(mean) >= bound, "exhaustive": True}

    def run(block):
        b, size = block
        rng = sampling.block_rng(seed, "edit-average", b)
        xs = _random_strings(rng, size, d)
        ys = _random_strings(rng, size, d)
        return float(sum(2 * d - 2 * lcs_bits(x, d, y, d) for x, y in zip(xs, ys)))

    parts = sampling.ordered_map(run, sampling.blocks(samples))
    mean = sampling.fixed_order_sum(parts) / samples
    ci = sampling.hoeffding_halfwidth(samples, 2.0 * d)
    return {"d": d, "samples": samples, "mean": mean, "ci99": ci, "bound": bound,
            "pass": mean - ci >= bound, "exhaustive": False}


class TauSample(NamedTuple):
    x: int
    j: int
    y: int
    pair: tuple[int, int]
    ed: int


def tau_sampler(d: int, epsilon: float, k: int, seed: int, samples: int,
                zero_noise: bool = False) -> Iterator[TauSample]:
    """Pairs (x, S^j(x) + y) with x uniform, y epsilon-biased, j uniform in 1..k.

    Every emitted sample is checked against ED <= 2|y| + 2j.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    for b, size in sampling.blocks(samples):
        rng = sampling.block_rng(seed, "tau", b)
        xs = _random_strings(rng, size, d)
        ys = _random_strings(rng, size, d, epsilon)
        js = rng.integers(1, k + 1, size=size).tolist()
        for x, y, j in zip(xs, ys, js):
            if zero_noise:
                y = 0
            z = rotate(x, d, j) ^ y
            ed = 2 * d - 2 * lcs_bits(x, d, z, d)
            if ed > 2 * y.bit_count() + 2 * j:
                raise AssertionError(f"shift bound violated at x={x}, j={j}, y={y}")
            yield TauSample(x, j, y, (x, z), ed)


def tau_mean(d: int, epsilon: float, k: int, samples: int, seed: int) -> dict:
    """Mean tau-distance against E[2|y| + 2j] = 2 eps d + k + 1.

    That expectation is at most 4 eps d whenever k < 2 eps d.  The check
    passes when the sample mean is within its 99% Hoeffding half-width of it.
    """
    total = 0
    for s in tau_sampler(d, epsilon, k, seed, samples):
        total += s.ed
    mean = total / samples
    ci = sampling.hoeffding_halfwidth(samples, 2.0 * d)
    bound = 2 * epsilon * d + k + 1
    return {"d": d, "epsilon": epsilon, "k": k, "samples": samples, "mean": mean, "ci99": ci,
            "bound": bound, "four_eps_d": 4 * epsilon * d, "pass": mean - ci <= bound}


def _pm1_values(f: fc.SpectralFunction) -> np.ndarray:
    v = f.scalar_values()
    if not np.all(np.abs(v) == 1.0):
        raise PreconditionError("function must take values in {-1, 1}")
    return v


def beckner_shift_identity(f: fc.SpectralFunction, epsilon: float, j: int) -> dict:
    """Shifted noisy disagreement versus its spectral expression.

    The integral is summed directly over all (x, y); the spectral side is
    1 - sum_A (1 - 2 eps)^|A| f^(A) f^(S^j A).
    """
    v = _pm1_values(f)
    d = f.dim
    if d > 14:
        raise CapacityError("exact double summation is limited to d <= 14")
    x = np.arange(1 << d)
    w = fc.biased_weights(d, epsilon)
    shifted = rotate(x, d, j)
    integral = 0.0
    parts = []
    for y in range(1 << d):
        parts.append(w[y] * float(np.mean(np.abs(v - v[shifted ^ y]))))
    integral = math.fsum(parts)
    c = f.scalar_coeffs()
    pc = fc.popcounts(d)
    q = np.power(1.0 - 2.0 * epsilon, pc)
    spectral = 1.0 - float(np.sum(q * c * c[rotate(x, d, j)]))
    relaxed = 1.0 - float(np.sum(q * c * c))
    return {
        "integral": integral,
        "spectral_value": spectral,
        "residual": abs(integral - spectral),
        "relaxation": relaxed,
        "relaxation_holds": integral >= relaxed - IDENTITY_TOL,
        "holds": abs(integral - spectral) <= SPECTRAL_RESIDUAL_TOL,
    }


def _L(epsilon: float) -> float:
    a = math.log2(1.0 / epsilon)
    return math.sqrt(a * math.log2(a))


def edit_theorem_bound(d, epsilon: float, exponent_constant: float = 1.0,
                       delta_constant: float = 1.0, log2_d: float | None = None) -> dict:
    """Explicit-constant lower bound for c1 of the edit metric on length-d strings.

    value = sqrt(eps) / 2^(a L) * (d/80 - 6 * 2^(-b L) * 2d) / (4 eps d) with
    L = sqrt(log2(1/eps) log2 log2(1/eps)); the two constants a, b are inputs.
    ``log2_d`` may replace ``d`` for dimensions too large for a float.
    """
    if not 0.0 < epsilon < 0.1:
        raise ValueError("epsilon must lie in (0, 1/10)")
    L = _L(epsilon)
    bracket = 1.0 / 80.0 - 12.0 * 2.0 ** (-delta_constant * L)
    raw = math.sqrt(epsilon) * 2.0 ** (-exponent_constant * L) * bracket / (4.0 * epsilon)
    lg = math.log2(d) if log2_d is None else float(log2_d)
    # proof regime: k with 10^(20/eps) <= k <= eps*d must exist
    in_regime = math.log10(epsilon) + lg * math.log10(2.0) >= 20.0 / epsilon
    return {"epsilon": epsilon, "L": L, "bracket": bracket, "raw": raw,
            "value": max(1.0, raw), "clamped": raw < 1.0, "in_regime": in_regime,
            "log2_d": lg}


def edit_bound_profile(log2_ds, exponent_constant: float = 1.0,
                       delta_constant: float = 1.0) -> list[dict]:
    """The bound along eps = 1/log2 d for a range of (possibly astronomical) d."""
    rows = []
    for lg in log2_ds:
        eps = 1.0 / float(lg)
        rows.append(edit_theorem_bound(None, eps, exponent_constant, delta_constant, log2_d=lg))
    return rows
