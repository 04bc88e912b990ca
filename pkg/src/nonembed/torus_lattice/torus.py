"""Trigonometric polynomials on R^n / L and the inequalities checked on them.

A frequency is stored by its integer coordinates ``k`` in the dual basis,
so the character ``e^{2 pi i <w, x>}`` with ``w = B* k`` evaluates at
``x = B a`` to ``e^{2 pi i k . a}``.  Gradients carry the ``2 pi`` factor
of the character.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import sampling
from ..errors import CapacityError, PreconditionError
from ..tolerances import SPECTRAL_RESIDUAL_TOL
from .lattice import (
    DistanceTable,
    LatticeBasis,
    covering_radius_bracket,
    distance_to_lattice,
    dual_basis,
    is_kz_reduced,
    shortest_vector,
    torus_distance,
)

GRID_CAP = 1 << 20
EMBEDDING_CONSTANT = math.pi / 2  # Lip(f) <= 2 pi n^{(3n-1)/2}, Lip(f^-1) <= sqrt(n) / 4
AVERAGE_TORUS_CONSTANT = 16
BUSER_CONSTANT = 2 * math.sqrt(10)


@dataclass(frozen=True, eq=False)
class TorusFunction:
    base: LatticeBasis
    terms: tuple  # ((k_1, ..., k_n), complex amplitude), one entry per frequency

    def __post_init__(self):
        merged: dict = {}
        for k, c in self.terms:
            k = tuple(int(v) for v in k)
            if len(k) != self.base.n:
                raise ValueError("frequency has the wrong dimension")
            merged[k] = merged.get(k, 0j) + complex(c)
        object.__setattr__(self, "terms", tuple(sorted(merged.items())))

    @classmethod
    def constant(cls, base: LatticeBasis, value: float = 1.0) -> "TorusFunction":
        return cls(base, (((0,) * base.n, value),))

    @classmethod
    def cosine(cls, base: LatticeBasis, k, amplitude: float = 1.0) -> "TorusFunction":
        """amplitude * cos(2 pi <w, x>) for the dual vector with coordinates k."""
        k = tuple(int(v) for v in k)
        neg = tuple(-v for v in k)
        return cls(base, ((k, amplitude / 2), (neg, amplitude / 2)))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def frequencies(self) -> np.ndarray:
        K = np.array([k for k, _ in self.terms], dtype=np.float64).reshape(-1, self.n)
        return K @ dual_basis(self.base).basis.T

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c for _, c in self.terms], dtype=np.complex128)

    @property
    def max_frequency(self) -> int:
        return max((max(abs(v) for v in k) for k, _ in self.terms), default=0)

    def is_real(self, tol: float = 1e-12) -> bool:
        table = dict(self.terms)
        return all(abs(table.get(tuple(-v for v in k), 0j) - np.conj(c)) <= tol for k, c in self.terms)

    def mean(self) -> complex:
        return dict(self.terms).get((0,) * self.n, 0j)

    def evaluate_coords(self, A: np.ndarray) -> np.ndarray:
        """Values at points B a for the rows a of A."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        K = np.array([k for k, _ in self.terms], dtype=np.float64).reshape(-1, self.n)
        return np.exp(2j * np.pi * (A @ K.T)) @ self.amplitudes

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.evaluate_coords(self.base.coords(np.atleast_2d(X)))

    def gradient_coords(self, A: np.ndarray) -> np.ndarray:
        """Gradient rows (complex) at points B a."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        K = np.array([k for k, _ in self.terms], dtype=np.float64).reshape(-1, self.n)
        E = np.exp(2j * np.pi * (A @ K.T)) * self.amplitudes
        return 2j * np.pi * (E @ self.frequencies)

    def to_dict(self) -> dict:
        return {
            "lattice": self.base.to_dict(),
            "terms": [{"k": list(k), "re": c.real, "im": c.imag} for k, c in self.terms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TorusFunction":
        base = LatticeBasis.from_dict(data["lattice"])
        return cls(base, tuple((t["k"], complex(t["re"], t["im"])) for t in data["terms"]))


def random_trig_polynomial(base: LatticeBasis, terms: int, max_freq: int, rng: np.random.Generator,
                           real: bool = True) -> TorusFunction:
    out = []
    for _ in range(terms):
        k = tuple(int(v) for v in rng.integers(-max_freq, max_freq + 1, size=base.n))
        c = complex(rng.normal(), rng.normal())
        if real:
            out.append((k, c / 2))
            out.append((tuple(-v for v in k), np.conj(c) / 2))
        else:
            out.append((k, c))
    return TorusFunction(base, tuple(out))


def _grid(f: TorusFunction, factor: int = 2) -> np.ndarray:
    """Uniform grid on [0,1)^n fine enough to integrate products of f exactly."""
    m = factor * f.max_frequency + 1
    if m ** f.n > GRID_CAP:
        raise CapacityError("quadrature grid too large")
    g = np.arange(m) / m
    mesh = np.meshgrid(*([g] * f.n), indexing="ij")
    return np.stack([x.ravel() for x in mesh], axis=1)


def _nonzero_mass(f: TorusFunction, weight=None) -> float:
    amps = f.amplitudes
    W = f.frequencies
    total = 0.0
    for k, c, w in zip((k for k, _ in f.terms), amps, W):
        if any(k):
            total += abs(c) ** 2 * (1.0 if weight is None else weight(w))
    return total


def dual_minimum(L: LatticeBasis) -> float:
    return shortest_vector(dual_basis(L))["N"]


def poincare_lattice_check(f: TorusFunction) -> dict:
    """Variance against gradient energy with the constant 2 / N(L*)^2.

    Both sides come from the terms.  The same quantities are recomputed on
    an aliasing-free grid as an independent check.  ``rhs_frequency`` drops
    the (2 pi)^2 of the gradient; it is what equality at the shortest dual
    vector refers to.
    """
    N = dual_minimum(f.base)
    lhs = float(2.0 * _nonzero_mass(f))
    grad_energy = _nonzero_mass(f, lambda w: 4 * math.pi ** 2 * float(w @ w))
    freq_energy = _nonzero_mass(f, lambda w: float(w @ w))
    rhs = float(2.0 / N ** 2 * grad_energy)
    rhs_frequency = float(2.0 / N ** 2 * freq_energy)
    residual = None
    if f.max_frequency == 0 or (2 * f.max_frequency + 1) ** f.n <= GRID_CAP:
        A = _grid(f)
        vals = f.evaluate_coords(A)
        grads = f.gradient_coords(A)
        var = float(np.mean(np.abs(vals - vals.mean()) ** 2))
        energy = float(np.mean(np.sum(np.abs(grads) ** 2, axis=1)))
        residual = max(abs(2 * var - lhs), abs(energy - grad_energy))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rhs_frequency": rhs_frequency,
        "convention_factor": 4 * math.pi ** 2,
        "dual_minimum": N,
        "identity_residual": residual,
        "holds": bool(lhs <= rhs + SPECTRAL_RESIDUAL_TOL and lhs <= rhs_frequency + SPECTRAL_RESIDUAL_TOL),
    }


def _uniform_coords(seed: int, stream: str, samples: int, n: int, width: int = 1):
    out = []
    for b, size in sampling.blocks(samples):
        out.append(sampling.block_rng(seed, stream, b).random((size, width * n)))
    return np.vstack(out)


def gaussian_vectors(seed: int, stream: str, samples: int, n: int) -> np.ndarray:
    """Standard Gaussian rows via Box-Muller over the counter-based stream."""
    U = _uniform_coords(seed, stream, samples, n, width=2)
    u1, u2 = 1.0 - U[:, :n], U[:, n:]
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2 * np.pi * u2)


def gaussian_smoothing_check(f: TorusFunction, samples: int = 4096, seed: int | None = None) -> dict:
    """Pairwise L1 spread against Gaussian-displacement spread.

    lhs  = E_{x,y} |f(x) - f(y)|
    rhs  = E_x E_{g ~ N(0, I)} |f(x) - f(x + g)| / (1 - exp(-2 pi^2 N(L*)^2))
    The squared version of the Gaussian spread has the closed form
    2 sum_{w != 0} (1 - exp(-2 pi^2 |w|^2)) |c_w|^2, checked exactly per
    displacement on the grid and in mean over the sampled displacements.
    """
    if not f.is_real():
        raise PreconditionError("f must be real valued")
    seed = sampling.default_seed() if seed is None else seed
    n = f.n
    N = dual_minimum(f.base)
    const = 1.0 / (1.0 - math.exp(-2 * math.pi ** 2 * N ** 2))
    B = f.base.basis
    X = _uniform_coords(seed, "smoothing-x", samples, n)
    Y = _uniform_coords(seed, "smoothing-y", samples, n)
    G = gaussian_vectors(seed, "smoothing-g", samples, n)
    GA = f.base.coords(G)
    fx = f.evaluate_coords(X).real
    lhs_vals = np.abs(fx - f.evaluate_coords(Y).real)
    rhs_vals = np.abs(fx - f.evaluate_coords(X + GA).real) * const
    lhs, rhs = float(lhs_vals.mean()), float(rhs_vals.mean())
    ci = sampling.normal_halfwidth(lhs_vals) + sampling.normal_halfwidth(rhs_vals)

    W = f.frequencies
    amps = f.amplitudes
    closed = float(2.0 * _nonzero_mass(f, lambda w: 1.0 - math.exp(-2 * math.pi ** 2 * float(w @ w))))
    # per displacement g: int |f(x) - f(x+g)|^2 dm = sum |c_w|^2 |1 - e^{2 pi i <w,g>}|^2
    per_g = (np.abs(1 - np.exp(2j * np.pi * (G @ W.T))) ** 2) @ (np.abs(amps) ** 2)
    residual = 0.0
    try:
        A = _grid(f)
        fa = f.evaluate_coords(A)
        for g in GA[:8]:
            direct = float(np.mean(np.abs(fa - f.evaluate_coords(A + g)) ** 2))
            termwise = float((np.abs(1 - np.exp(2j * np.pi * (B @ g) @ W.T)) ** 2) @ (np.abs(amps) ** 2))
            residual = max(residual, abs(direct - termwise))
    except CapacityError:
        residual = None
    sampled = float(per_g.mean())
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ci99": ci,
        "constant": const,
        "l2_closed_form": closed,
        "l2_sampled": sampled,
        "l2_ci99": sampling.normal_halfwidth(per_g),
        "identity_residual": residual,
        "holds": lhs <= rhs + ci,
    }


def buser_functional_check(f: TorusFunction, samples: int = 4096, seed: int | None = None) -> dict:
    """E|f(x) - f(y)| <= (2 sqrt(10) / N(L*)) E|grad f|, both sides sampled."""
    if not f.is_real():
        raise PreconditionError("f must be real valued")
    seed = sampling.default_seed() if seed is None else seed
    n = f.n
    N = dual_minimum(f.base)
    X = _uniform_coords(seed, "buser-x", samples, n)
    Y = _uniform_coords(seed, "buser-y", samples, n)
    lhs_vals = np.abs(f.evaluate_coords(X).real - f.evaluate_coords(Y).real)
    grad = np.linalg.norm(f.gradient_coords(X).real, axis=1)
    rhs_vals = BUSER_CONSTANT / N * grad
    lhs, rhs = float(lhs_vals.mean()), float(rhs_vals.mean())
    ci = sampling.normal_halfwidth(lhs_vals) + sampling.normal_halfwidth(rhs_vals)
    return {"lhs": lhs, "rhs": rhs, "ci99": ci, "slack": rhs - lhs, "holds": lhs <= rhs + ci}


def korkin_inequality_check(L: LatticeBasis, trials: int = 1000, seed: int | None = None,
                            require_kz: bool = True) -> dict:
    """Two-sided comparison of |sum u_j x_j| with (sum u_j^2 |x_j|^2)^{1/2} on random u."""
    seed = sampling.default_seed() if seed is None else seed
    if require_kz and not is_kz_reduced(L):
        raise PreconditionError("basis is not KZ reduced")
    n = L.n
    B = L.basis
    norms = np.linalg.norm(B, axis=0)
    U = np.vstack([sampling.block_rng(seed, "korkin", b).normal(size=(size, n)) for b, size in sampling.blocks(trials)])
    mid = np.sqrt((U ** 2) @ norms ** 2)
    val = np.linalg.norm(U @ B.T, axis=1)
    lower_c = n ** (-(3 * n - 1) / 2)
    upper_c = math.sqrt(n)
    A = B / norms
    sv = np.linalg.svd(A, compute_uv=False)
    ratios = val / mid
    return {
        "trials": trials,
        "min_ratio": float(ratios.min()),
        "max_ratio": float(ratios.max()),
        "lower_constant": lower_c,
        "upper_constant": upper_c,
        "smallest_singular_value": float(sv[-1]),
        "abs_det_normalized": float(abs(np.linalg.det(A))),
        "det_bound": float(n ** (-n)),
        "holds": bool(np.all(lower_c * mid <= val * (1 + 1e-12)) and np.all(val <= upper_c * mid * (1 + 1e-12))),
    }


@dataclass(frozen=True, eq=False)
class TorusEmbedding:
    base: LatticeBasis

    def __call__(self, X) -> np.ndarray:
        """Rows x -> (|x_j| cos 2 pi a_j, |x_j| sin 2 pi a_j)_j in R^{2n}."""
        A = self.base.coords(np.atleast_2d(X))
        return self.from_coords(A)

    def from_coords(self, A: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(self.base.basis, axis=0)
        ang = 2 * np.pi * np.atleast_2d(A)
        return np.hstack([norms * np.cos(ang), norms * np.sin(ang)])


def _probe_displacements(n: int) -> np.ndarray:
    rows = []
    for j in range(n):
        for t in (1e-6, 0.25, 0.5):
            e = np.zeros(n)
            e[j] = t
            rows.append(e)
    rows.append(np.full(n, 0.5))
    rows.append(np.full(n, 1e-6))
    return np.array(rows)


def explicit_torus_embedding(L: LatticeBasis, samples: int = 4096, seed: int | None = None,
                             require_kz: bool = True) -> dict:
    """Circle-per-basis-vector embedding and its measured distortion.

    The distortion is the ratio of the largest to the smallest expansion
    |f(x) - f(y)| / d(x, y) over random pairs plus probe displacements along
    the basis (tiny, quarter and half period).
    """
    seed = sampling.default_seed() if seed is None else seed
    n = L.n
    kz = is_kz_reduced(L) if n <= 6 else False
    if require_kz and not kz:
        raise PreconditionError("basis is not KZ reduced")
    emb = TorusEmbedding(L)
    D = _uniform_coords(seed, "embedding", samples, n)
    D = np.vstack([D, _probe_displacements(n)])
    # expansion only depends on the displacement a = coords(x - y)
    img = np.linalg.norm(emb.from_coords(D) - emb.from_coords(np.zeros((1, n))), axis=1)
    dist = distance_to_lattice(L, D @ L.basis.T)
    keep = dist > 0
    ratio = img[keep] / dist[keep]
    distortion = float(ratio.max() / ratio.min())
    bound = EMBEDDING_CONSTANT * n ** (1.5 * n)
    return {
        "map": emb,
        "pairs": int(keep.sum()),
        "lipschitz": float(ratio.max()),
        "inverse_lipschitz": float(1.0 / ratio.min()),
        "distortion": distortion,
        "bound": bound,
        "kz_basis": kz,
        "holds": distortion <= bound * (1 + 1e-12),
    }


def _golden_max(g, lo: float, hi: float, iters: int = 200) -> tuple[float, float]:
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(iters):
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - phi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + phi * (b - a)
            gd = g(d)
        if b - a < 1e-14 * max(1.0, abs(b)):
            break
    s = (a + b) / 2
    return s, g(s)


def theorem_lattice_bound(L: LatticeBasis, N: float | None = None, r_hi: float | None = None,
                          seed: int | None = None) -> dict:
    """Explicit L1 distortion lower bound for R^n / L.

    max_t (1 - exp(-2 pi^2 N^2 / t^2)) sqrt(n) t / (16 r_hi) with N the
    shortest dual vector and r_hi a certified upper bound on the dual
    covering radius.  Substituting t = s N makes the optimization over s
    independent of the scale of L.
    """
    n = L.n
    D = dual_basis(L)
    bracket = None
    if N is None:
        N = shortest_vector(D)["N"]
    if r_hi is None:
        bracket = covering_radius_bracket(D, seed=seed)
        r_hi = bracket["hi"]

    def g(s):
        return s * -math.expm1(-2 * math.pi ** 2 / (s * s))

    s_opt, g_opt = _golden_max(g, 0.5, 20.0)
    bound = math.sqrt(n) * N / (AVERAGE_TORUS_CONSTANT * r_hi) * g_opt
    out = {"bound": bound, "t_opt": s_opt * N, "dual_minimum": N, "dual_covering_hi": r_hi}
    if bracket is not None:
        out["dual_covering_lo"] = bracket["lo"]
        out["bracket_width"] = bracket["width"]
        out["bracket_tight"] = bracket["width"] <= 1e-6 * r_hi
    return out


def average_torus_check(L: LatticeBasis, samples: int = 10000, seed: int | None = None) -> dict:
    """Mean torus distance from a uniform point to 0 against n / (16 r(L*)_hi).

    The confidence half-width is Hoeffding's with range r(L)_hi, since every
    distance to the lattice is at most the covering radius.
    """
    seed = sampling.default_seed() if seed is None else seed
    n = L.n
    dual_r = covering_radius_bracket(dual_basis(L), seed=seed)["hi"]
    own_r = covering_radius_bracket(L, seed=seed)["hi"]
    table = DistanceTable(L)
    A = _uniform_coords(seed, "average-torus", samples, n)
    parts = sampling.ordered_map(lambda s: table(A[s:s + sampling.BLOCK] @ L.basis.T),
                                 range(0, samples, sampling.BLOCK))
    vals = np.concatenate(parts)
    mean = sampling.fixed_order_sum(vals.tolist()) / samples
    ci = sampling.hoeffding_halfwidth(samples, own_r)
    target = n / (AVERAGE_TORUS_CONSTANT * dual_r)
    return {
        "mean": mean,
        "ci99": ci,
        "target": target,
        "dual_covering_hi": dual_r,
        "holds": mean - ci >= target,
    }


__all__ = [
    "TorusFunction",
    "TorusEmbedding",
    "random_trig_polynomial",
    "gaussian_vectors",
    "dual_minimum",
    "poincare_lattice_check",
    "gaussian_smoothing_check",
    "buser_functional_check",
    "korkin_inequality_check",
    "explicit_torus_embedding",
    "theorem_lattice_bound",
    "average_torus_check",
    "torus_distance",
]
