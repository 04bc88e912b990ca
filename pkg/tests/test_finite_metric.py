import itertools
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from nonembed import simplex
from nonembed.errors import UnboundedError
from nonembed.finite_metric import (
    FiniteMetric, cut_matrix, distortion, exact_c1_lp, from_matrix, graph_metric, hamming_cube,
    hausdorff_distance, is_cut_cone_metric, quotient_metric, random_metric, verify_no_geo,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_metric(name):
    return FiniteMetric.from_dict(json.loads((FIXTURES / name).read_text()))


def float_c1(X):
    """Independent float LP over the same cut cone, solved by HiGHS."""
    n = X.n
    M = cut_matrix(n)
    d = X.dist[np.triu_indices(n, 1)]
    K = M.shape[1]
    A = np.vstack([np.hstack([M, np.zeros((len(d), 1))]), np.hstack([-M, d[:, None]])])
    b = np.concatenate([d, np.zeros(len(d))])
    r = linprog(np.r_[np.zeros(K), -1.0], A_ub=A, b_ub=b, bounds=[(0, None)] * (K + 1))
    return 1.0 / -r.fun


def test_rejects_non_metrics():
    with pytest.raises(ValueError):
        from_matrix([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(ValueError):
        from_matrix([[0, 0], [0, 0]])


def test_hausdorff_examples():
    X = hamming_cube(3)
    assert hausdorff_distance(X, [1], [1]) == 0
    assert hausdorff_distance(X, [0], [7]) == 3
    assert hausdorff_distance(X, [0b000], [0b110, 0b101], exact=True) == 2


def test_quotient_singletons_is_identity():
    X = hamming_cube(2)
    q = quotient_metric(X, [[i] for i in range(4)])
    assert q.quotient.exact_matrix() == X.exact_matrix()


def test_quotient_antipodal_square():
    q = quotient_metric(hamming_cube(2), [[0b00, 0b11], [0b01, 0b10]])
    assert q.quotient.exact_matrix()[0][1] == 1


def test_quotient_path_closure():
    X = graph_metric(4, [(0, 1), (1, 2), (2, 3)])
    q = quotient_metric(X, [[0, 3], [1, 2]])
    assert q.quotient.exact_matrix()[0][1] == 1


def test_no_geo_on_translation_orbits():
    X = hamming_cube(3)
    blocks = [[x, x ^ 1] for x in range(8) if not x & 1]
    out = verify_no_geo(quotient_metric(X, blocks))
    assert out == {"hypothesis_holds": True, "equality_holds": True}
    assert verify_no_geo(quotient_metric(X, [[i] for i in range(8)]))["equality_holds"]


def test_no_geo_hypothesis_failure_reported():
    X = graph_metric(3, [(0, 1), (1, 2)])
    out = verify_no_geo(quotient_metric(X, [[0, 2], [1]]))
    assert out["hypothesis_holds"] is True
    out = verify_no_geo(quotient_metric(X, [[0, 1], [2]]))
    assert out["hypothesis_holds"] is False


def test_distortion_examples():
    X = hamming_cube(2)
    coords = np.array([[(x >> j) & 1 for j in range(2)] for x in range(4)], dtype=float)
    assert distortion(coords, X, "l1")["dist"] == 1.0
    X3 = hamming_cube(3)
    coords3 = np.array([[(x >> j) & 1 for j in range(3)] for x in range(8)], dtype=float)
    assert distortion(coords3, X3, "l2")["dist"] == pytest.approx(math.sqrt(3))


def test_c1_small_cases():
    assert exact_c1_lp(hamming_cube(2))["value"] == 1
    assert exact_c1_lp(from_matrix([[0, 1, 1], [1, 0, 1], [1, 1, 0]]))["value"] == 1


def test_c1_k23_frozen():
    # 4/3, confirmed by the float LP below and frozen as a rational
    X = load_metric("k23.json")
    out = exact_c1_lp(X)
    assert out["value"] == Fraction(4, 3)
    assert float_c1(X) == pytest.approx(4 / 3, rel=1e-9)
    rho = out["witness"].semimetric()
    M = X.exact_matrix()
    for i, j in itertools.combinations(range(5), 2):
        assert M[i][j] <= rho[i][j] <= Fraction(4, 3) * M[i][j]


@given(st.integers(3, 6), st.integers(0, 2**32 - 1))
def test_c1_matches_float_lp(n, seed):
    X = random_metric(n, np.random.default_rng(seed))
    exact = exact_c1_lp(X)["value"]
    assert exact >= 1
    assert float(exact) == pytest.approx(float_c1(X), rel=1e-7)


def test_cut_cone_membership():
    assert is_cut_cone_metric(hamming_cube(2).exact_matrix())
    assert not is_cut_cone_metric(load_metric("k23.json").exact_matrix())


def test_simplex_small_lp():
    # max x + y  s.t.  x + 2y <= 4, 3x + y <= 6
    res = simplex.maximize([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert res.value == Fraction(14, 5)
    assert res.x == [Fraction(8, 5), Fraction(6, 5)]


def test_simplex_unbounded():
    with pytest.raises(UnboundedError):
        simplex.maximize([1, 0], [[0, 1]], [1])


@given(st.integers(0, 2**32 - 1))
def test_simplex_matches_highs(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(2, 6, size=2)
    A = rng.integers(0, 5, size=(m, k))
    A[0] = np.maximum(A[0], 1)
    b = rng.integers(1, 10, size=m)
    c = rng.integers(-2, 5, size=k)
    res = simplex.maximize(c.tolist(), A.tolist(), b.tolist())
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * k)
    assert float(res.value) == pytest.approx(-ref.fun, abs=1e-9)
