import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonembed import cube_quotients as cq
from nonembed import fourier_cube as fc
from nonembed.finite_metric import exact_c1_lp, hamming_cube, quotient_metric, verify_no_geo


def brute_dual(d, words):
    return sorted(y for y in range(1 << d) if all(bin(x & y).count("1") % 2 == 0 for x in words))


def random_code(rng, d, k):
    while True:
        gens = rng.integers(1, 1 << d, size=k).tolist()
        if cq.rank(gens) == k:
            return cq.LinearCode(d, tuple(gens))


def test_dual_of_repetition_code():
    D = cq.dual_code(cq.LinearCode(4, (15,)))
    assert D.dim == 3
    assert sorted(D.codewords().tolist()) == [x for x in range(16) if bin(x).count("1") % 2 == 0]


def test_dual_of_full_space():
    assert cq.dual_code(cq.LinearCode(3, (1, 2, 4))).dim == 0


@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.data())
def test_double_dual_is_identity(d, seed, data):
    k = data.draw(st.integers(1, d))
    C = random_code(np.random.default_rng(seed), d, k)
    D = cq.dual_code(C)
    assert sorted(D.codewords().tolist()) == brute_dual(d, C.codewords().tolist())
    assert sorted(cq.dual_code(D).codewords().tolist()) == sorted(C.codewords().tolist())


def test_greedy_repetition():
    out = cq.code_greedy(4, 0.9, 1)
    assert out["code"].codewords().tolist() == [0, 15]
    assert out["code"].min_weight == 4


def test_hamming_code_weight():
    gens = (0b1000110, 0b0100101, 0b0010011, 0b0001111)
    words = cq.span(gens)
    assert min(bin(int(w)).count("1") for w in words[1:]) == 3
    assert cq.LinearCode(7, gens).min_weight == 3


def test_greedy_certified_d12():
    out = cq.code_greedy(12, 0.15, 3)
    C = out["code"]
    assert out["certified"]
    assert min(bin(int(w)).count("1") for w in C.codewords()[1:]) >= 2
    b = cq.theorem_code_bound(C)
    assert b <= float(exact_c1_lp(cq.coset_quotient(C))["value"]) + 1e-9


def test_trivial_dual_quotient_is_cube():
    C = cq.LinearCode(3, (1, 2, 4))
    assert cq.coset_quotient(C).exact_matrix() == hamming_cube(3).exact_matrix()


def test_quotient_of_repetition_d3():
    # four-element dual {000, 011, 101, 110}: the two cosets are at distance 1
    q = cq.coset_quotient(cq.LinearCode(3, (7,)))
    assert q.n == 2 and q.exact_matrix()[0][1] == 1


@pytest.mark.parametrize("d,k", [(4, 1), (5, 2), (6, 3), (7, 2)])
def test_coset_quotient_matches_generic_paths(d, k):
    C = random_code(np.random.default_rng(d * 10 + k), d, k)
    fast = cq.coset_quotient(C)
    generic = cq.coset_action_quotient(C)
    s = cq.syndrome(C, np.arange(1 << d))
    orbits = cq.dual_translation_action(C).orbits()
    for i, j in itertools.product(range(len(orbits)), repeat=2):
        a, b = s[orbits[i][0]], s[orbits[j][0]]
        assert generic.exact_matrix()[i][j] == fast.exact_matrix()[a][b]
    q = quotient_metric(hamming_cube(d), orbits)
    assert verify_no_geo(q) == {"hypothesis_holds": True, "equality_holds": True}


def test_no_geo_fast_path_matches_exact_path():
    for action in (cq.cyclic_action(5), cq.translation_action(4, [3, 5])):
        fast = cq.no_geo_check(action)
        exact = verify_no_geo(quotient_metric(hamming_cube(action.d), action.orbits()))
        assert (fast["hypothesis_holds"], fast["equality_holds"]) == (
            exact["hypothesis_holds"], exact["equality_holds"])


def test_average_lower_union_bound():
    # best radius t = 3: 3 * (1 - 2 * (1 + 10 + 45) / 1024) = 171/64
    by_radius = [t * (1 - Fraction(2 * sum(math.comb(10, k) for k in range(t)), 1024)) for t in range(1, 6)]
    assert max(by_radius) == Fraction(171, 64)
    assert cq.certified_average_lower(10, 2) == Fraction(171, 64)
    assert cq.certified_average_lower(10, 2) >= 2
    # group order 2^d - 1 leaves only the t = 1 term: 1 - 7/8
    assert cq.certified_average_lower(3, 7) == Fraction(1, 8)


def test_average_lower_is_below_antipodal_average():
    d = 3
    action = cq.CubeAction(d, ((cq.identity_perm(d), 7),))
    orbits = action.orbits()
    q = cq.orbit_quotient(action)
    exact = cq.mean_orbit_distance(q, [len(o) for o in orbits])
    pairs = [min(bin(x ^ y).count("1"), bin(x ^ y ^ 7).count("1")) for x in range(8) for y in range(8)]
    assert exact == Fraction(sum(pairs), 64)
    assert cq.certified_average_lower(d, 2) <= exact


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_average_lower_sound_for_translations(d, seed):
    rng = np.random.default_rng(seed)
    vecs = rng.integers(1, 1 << d, size=2).tolist()
    action = cq.translation_action(d, vecs)
    orbits = action.orbits()
    q = cq.orbit_quotient(action)
    exact = cq.mean_orbit_distance(q, [len(o) for o in orbits])
    assert cq.certified_average_lower(d, action.order()) <= exact


def test_fourier_vanishing_on_coset_indicator():
    C = cq.LinearCode(4, (15,))
    members = cq.dual_code(C).codewords().tolist()
    out = cq.fourier_vanishing_check(fc.indicator(4, members), C)
    assert out["holds"] and out["max_low_coeff"] == 0.0


@given(st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_fourier_vanishing_on_averaged_functions(d, seed):
    rng = np.random.default_rng(seed)
    C = random_code(rng, d, int(rng.integers(1, d)))
    action = cq.dual_translation_action(C)
    v = action.average(rng.standard_normal(1 << d))
    assert cq.fourier_vanishing_check(fc.SpectralFunction.from_values(v, d), C)["holds"]


def test_character_in_code_is_invariant():
    C = cq.LinearCode(5, (0b00111, 0b11100))
    for A in C.codewords()[1:].tolist():
        f = fc.walsh_function(5, A)
        assert cq.dual_translation_action(C).is_invariant(f.scalar_values())
        assert bin(A).count("1") >= C.min_weight


def test_code_bound_repetition_against_lp():
    C = cq.LinearCode(4, (15,))
    assert cq.theorem_code_bound(C) == 0.5
    assert exact_c1_lp(cq.coset_quotient(C))["value"] == 1


def test_code_bound_full_space():
    C = cq.LinearCode(4, (1, 2, 4, 8))
    assert cq.theorem_code_bound(C) <= 1


def test_transitive_inequality_parity_and_thresholds():
    d = 8
    x = np.arange(1 << d)
    odd = np.array([bin(v).count("1") % 2 == 1 for v in x])
    assert cq.transitive_invariant_inequality(fc.indicator(d, odd), cq.cyclic_action(d))["holds"]
    for d in (6, 10, 14):
        pc = fc.popcounts(d)
        for k in range(d + 2):
            A = fc.indicator(d, pc >= k)
            assert cq.transitive_invariant_inequality(A, cq.cyclic_action(d))["holds"]


def test_group_bound_cyclic_d6_against_lp():
    action = cq.cyclic_action(6)
    q = cq.orbit_quotient(action)
    assert q.n == 14
    b = cq.corollary_group_bound(action)
    assert b >= 1
    # the 14-point LP is beyond the exact cap, so compare against the 12-point orbit quotient of d = 5
    a5 = cq.cyclic_action(5)
    assert cq.corollary_group_bound(a5) <= float(exact_c1_lp(cq.orbit_quotient(a5))["value"]) + 1e-9


def test_group_bound_clamped():
    assert cq.corollary_group_bound(cq.cyclic_action(6), order=63) == 1.0


def test_weight_class_quotient_is_path():
    d = 8
    q = cq.orbit_quotient(cq.symmetric_action(d))
    assert q.exact_matrix() == cq.weight_class_action_quotient(d).exact_matrix()
    assert cq.corollary_group_bound(cq.symmetric_action(d), order=math.factorial(d)) <= float(
        exact_c1_lp(cq.weight_class_action_quotient(d))["value"])
