"""Seeded, thread-count independent Monte Carlo plumbing.

Every random quantity is drawn from a Philox stream keyed by
``(seed, stream, block)``.  Sample ``i`` always lives in block
``i // BLOCK`` at offset ``i % BLOCK``, so sharding blocks across workers
never changes the numbers that come out.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

BLOCK = 1024
DEFAULT_SEED_ENV = "NONEMBED_SEED"

T = TypeVar("T")
R = TypeVar("R")

_threads = 1


def set_threads(n: int) -> None:
    global _threads
    if n < 1:
        raise ValueError("thread count must be positive")
    _threads = int(n)


def get_threads() -> int:
    return _threads


def default_seed() -> int:
    return int(os.environ.get(DEFAULT_SEED_ENV, "0"))


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode())


def block_rng(seed: int, stream: str | int, block: int) -> np.random.Generator:
    """Generator for one block of one named stream."""
    sid = stream_id(stream) if isinstance(stream, str) else int(stream)
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), sid, int(block)])
    return np.random.Generator(np.random.Philox(ss))


def blocks(samples: int) -> list[tuple[int, int]]:
    """Split ``samples`` into ``(block_index, size)`` pairs."""
    out = []
    b = 0
    left = samples
    while left > 0:
        size = min(BLOCK, left)
        out.append((b, size))
        left -= size
        b += 1
    return out


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T]) -> list[R]:
    """Map preserving input order; uses the configured worker count."""
    items = list(items)
    if _threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=_threads) as ex:
        return list(ex.map(fn, items))


def hoeffding_halfwidth(n: int, value_range: float, confidence: float = 0.99) -> float:
    """Two-sided Hoeffding half-width for the mean of ``n`` bounded samples."""
    if n <= 0:
        return math.inf
    alpha = 1.0 - confidence
    return value_range * math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def normal_halfwidth(values: np.ndarray, confidence: float = 0.99) -> float:
    """CLT half-width from the sample standard deviation."""
    from scipy.stats import norm

    n = len(values)
    if n < 2:
        return math.inf
    z = norm.ppf(0.5 + confidence / 2.0)
    return float(z * np.std(values, ddof=1) / math.sqrt(n))


def fixed_order_sum(parts: Sequence[float]) -> float:
    # merge partial sums left to right so the result does not depend on sharding
    return math.fsum(parts)
