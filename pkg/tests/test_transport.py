import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from nonembed import cube_quotients as cq
from nonembed import groups
from nonembed.finite_metric import hamming_cube, random_metric
from nonembed.transport import (
    DiscreteMeasure, emd, emd_uniform_sets, group_metric, transport_embedding, verify_group_invariant,
)


def lp_transport(X, sigma, tau):
    """Float transportation LP over the full n x n coupling, for comparison."""
    n = X.n
    A = []
    for i in range(n):
        row = np.zeros((n, n))
        row[i, :] = 1
        A.append(row.ravel())
    for j in range(n):
        col = np.zeros((n, n))
        col[:, j] = 1
        A.append(col.ravel())
    b = [float(w) for w in sigma.weights] + [float(w) for w in tau.weights]
    r = linprog(X.dist.ravel(), A_eq=np.array(A), b_eq=b, bounds=[(0, None)] * (n * n))
    return r.fun


def random_measure(rng, n):
    w = rng.integers(0, 4, size=n)
    w[rng.integers(n)] += 1
    return DiscreteMeasure(n, tuple(Fraction(int(v), int(w.sum())) for v in w))


def test_equal_measures_cost_zero():
    X = hamming_cube(2)
    s = DiscreteMeasure(4, ("1/2", "1/4", "1/4", "0"))
    out = emd(X, s, s)
    assert out["cost"] == 0
    assert all(i == j for i, j, _ in out["coupling"].entries)


def test_point_masses():
    X = hamming_cube(3)
    assert emd(X, DiscreteMeasure.point(8, 0), DiscreteMeasure.point(8, 7))["cost"] == 3


def test_antipodal_pairs_cost_one():
    X = hamming_cube(2)
    out = emd(X, DiscreteMeasure.uniform_on(4, [0, 3]), DiscreteMeasure.uniform_on(4, [1, 2]))
    assert out["cost"] == 1
    brute = min(sum(X.dist[a, b] for a, b in zip([0, 3], p)) / 2 for p in itertools.permutations([1, 2]))
    assert brute == 1


@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_emd_matches_float_lp_and_duality(n, seed):
    rng = np.random.default_rng(seed)
    X = random_metric(n, rng)
    s, t = random_measure(rng, n), random_measure(rng, n)
    out = emd(X, s, t)
    assert out["coupling"].is_valid(s, t)
    assert out["coupling"].cost(X) == out["cost"]
    M = X.exact_matrix()
    for i in out["u"]:
        for j in out["v"]:
            assert out["u"][i] + out["v"][j] <= M[i][j]
    assert float(out["cost"]) == pytest.approx(lp_transport(X, s, t), abs=1e-9)


def test_uniform_sets_examples():
    X = hamming_cube(3)
    assert emd_uniform_sets(X, [1, 2], [1, 2])["cost"] == 0
    assert emd_uniform_sets(X, [0], [6])["cost"] == 2


@given(st.integers(0, 2**32 - 1))
def test_uniform_sets_match_bijection_enumeration(seed):
    rng = np.random.default_rng(seed)
    X = hamming_cube(4)
    A = rng.choice(16, 4, replace=False).tolist()
    B = rng.choice(16, 4, replace=False).tolist()
    brute = min(sum(Fraction(int(X.dist[a, b])) for a, b in zip(A, p)) for p in itertools.permutations(B)) / 4
    assert emd_uniform_sets(X, A, B)["cost"] == brute


def test_group_invariant_cube_d3():
    G = groups.cube_group(3)
    X = hamming_cube(3)
    out = verify_group_invariant(G, X, [0, 7])
    assert out["holds"] and out["pairs"] == 16
    assert verify_group_invariant(G, X, [0])["holds"]
    assert verify_group_invariant(G, X, list(range(8)))["cosets"] == 1


def test_group_invariant_symmetric_group():
    G = groups.symmetric_group(4)
    X = group_metric(G, groups.hamming_on_permutations(G))
    H = groups.point_stabilizer_chain(4, G)[2]
    assert verify_group_invariant(G, X, H)["holds"]


@pytest.mark.parametrize("gens", [(7,), (0b011011,), (0b000111, 0b111000), (0b110000, 0b001100, 0b000011)])
def test_coset_measures_embed_isometrically(gens):
    d = max(g.bit_length() for g in gens)
    assert transport_embedding(cq.LinearCode(d, gens))["isometric"]
