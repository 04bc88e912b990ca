"""Small finite groups given by explicit multiplication tables."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import CapacityError, PreconditionError

MAX_TABLE = 5040


@dataclass(frozen=True)
class FiniteGroup:
    elements: tuple
    table: np.ndarray  # table[a, b] = index of elements[a] * elements[b]
    identity: int

    @property
    def order(self) -> int:
        return len(self.elements)

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inverse(self, a: int) -> int:
        return int(np.flatnonzero(self.table[a] == self.identity)[0])

    def index(self, element) -> int:
        return self.elements.index(element)

    def closure(self, gens: Sequence[int]) -> tuple[int, ...]:
        """Subgroup generated by the given element indices."""
        seen = {self.identity}
        frontier = [self.identity]
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens:
                    k = int(self.table[h, g])
                    if k not in seen:
                        seen.add(k)
                        nxt.append(k)
            frontier = nxt
        return tuple(sorted(seen))

    def is_subgroup(self, H: Sequence[int]) -> bool:
        Hs = set(H)
        if self.identity not in Hs:
            return False
        return all(int(self.table[a, self.inverse(b)]) in Hs for a in Hs for b in Hs)

    def left_cosets(self, H: Sequence[int]) -> list[tuple[int, ...]]:
        """Left cosets xH ordered by their smallest element."""
        if not self.is_subgroup(H):
            raise PreconditionError("H is not a subgroup")
        seen = set()
        out = []
        for x in range(self.order):
            if x in seen:
                continue
            coset = tuple(sorted(int(self.table[x, h]) for h in H))
            seen.update(coset)
            out.append(coset)
        return out


def from_operation(elements: Sequence[Hashable], op: Callable) -> FiniteGroup:
    elements = tuple(elements)
    if len(elements) > MAX_TABLE:
        raise CapacityError(f"explicit tables are capped at {MAX_TABLE} elements")
    pos = {e: i for i, e in enumerate(elements)}
    n = len(elements)
    table = np.empty((n, n), dtype=np.int64)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            table[i, j] = pos[op(a, b)]
    ident = next(i for i in range(n) if np.array_equal(table[i], np.arange(n)))
    table.setflags(write=False)
    return FiniteGroup(elements, table, ident)


def cube_group(d: int) -> FiniteGroup:
    """F_2^d under XOR, elements are bitmasks 0..2^d-1."""
    n = 1 << d
    if n > MAX_TABLE:
        raise CapacityError("cube group too large for an explicit table")
    x = np.arange(n)
    table = x[:, None] ^ x[None, :]
    table.setflags(write=False)
    return FiniteGroup(tuple(range(n)), table, 0)


def compose(p: tuple, q: tuple) -> tuple:
    """(p * q)(i) = p(q(i))."""
    return tuple(p[i] for i in q)


def symmetric_group(n: int) -> FiniteGroup:
    return from_operation(list(itertools.permutations(range(n))), compose)


def hamming_on_permutations(G: FiniteGroup) -> np.ndarray:
    """Number of positions where two permutations differ."""
    P = np.array(G.elements)
    return (P[:, None, :] != P[None, :, :]).sum(axis=2)


def is_right_invariant(G: FiniteGroup, dist: np.ndarray, gens: Sequence[int] | None = None) -> bool:
    """d(xg, yg) = d(x, y) for every generator g."""
    gens = range(G.order) if gens is None else gens
    for g in gens:
        col = G.table[:, g]
        if not np.array_equal(dist[np.ix_(col, col)], dist):
            return False
    return True


def is_left_invariant(G: FiniteGroup, dist: np.ndarray, gens: Sequence[int] | None = None) -> bool:
    gens = range(G.order) if gens is None else gens
    for g in gens:
        row = G.table[g, :]
        if not np.array_equal(dist[np.ix_(row, row)], dist):
            return False
    return True


def point_stabilizer_chain(n: int, G: FiniteGroup) -> list[tuple[int, ...]]:
    """S_n = G_0 > G_1 > ... where G_i fixes the last i points."""
    chain = []
    P = np.array(G.elements)
    for i in range(n):
        mask = np.ones(G.order, dtype=bool)
        for k in range(n - i, n):
            mask &= P[:, k] == k
        chain.append(tuple(int(v) for v in np.flatnonzero(mask)))
    return chain
