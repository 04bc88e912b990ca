import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import walsh_matrix
from nonembed import fourier_cube as fc
from nonembed.errors import PreconditionError


def coeffs_by_summation(values, d):
    return walsh_matrix(d) @ values / (1 << d)


def test_walsh_basis_element():
    f = fc.walsh_transform(fc.SpectralFunction.from_values(fc.walsh_function(3, 0b101).values, 3))
    expected = np.zeros(8)
    expected[0b101] = 1.0
    np.testing.assert_allclose(f.coeffs[:, 0], expected, atol=1e-15)


def test_constant_has_single_coefficient():
    f = fc.walsh_transform(fc.SpectralFunction.from_values(np.ones(8), 3))
    assert f.coeffs[0, 0] == 1.0
    assert np.all(f.coeffs[1:, 0] == 0.0)


def test_point_indicator_is_flat():
    f = fc.walsh_transform(fc.indicator(3, [0]))
    np.testing.assert_allclose(f.coeffs[:, 0], np.full(8, 1 / 8))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_transform_matches_direct_summation(d, seed):
    v = np.random.default_rng(seed).standard_normal(1 << d)
    f = fc.walsh_transform(fc.SpectralFunction.from_values(v, d))
    np.testing.assert_allclose(f.coeffs[:, 0], coeffs_by_summation(v, d), atol=1e-12)


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_round_trip_and_parseval(d, seed):
    v = np.random.default_rng(seed).standard_normal((1 << d, 2))
    out = fc.check_consistency(fc.SpectralFunction.from_values(v, d))
    assert out["ok"]
    assert out["round_trip"] <= 1e-10 and out["parseval"] <= 1e-10


def test_partial_derivative_of_character():
    g = fc.partial_derivative(fc.walsh_function(2, 0b01), 1)
    np.testing.assert_allclose(g.values, -fc.walsh_function(2, 0b01).values)


def test_partial_derivative_of_constant():
    g = fc.partial_derivative(fc.SpectralFunction.from_values(np.full(16, 3.0), 4), 2)
    assert np.all(g.values == 0.0)


def test_derivative_energy_by_direct_summation(rng):
    d = 4
    v = rng.standard_normal(1 << d)
    direct = 0.0
    for j in range(d):
        flipped = v[np.arange(1 << d) ^ (1 << j)]
        direct += np.mean(((v - flipped) / 2) ** 2)
    c = coeffs_by_summation(v, d)
    spectral = sum(bin(A).count("1") * c[A] ** 2 for A in range(1 << d))
    f = fc.SpectralFunction.from_values(v, d)
    assert fc.derivative_energy(f) == pytest.approx(direct, abs=1e-12)
    assert fc.spectral_energy(f) == pytest.approx(spectral, abs=1e-12)


def test_influences_dictator_and_parity():
    d = 4
    x = np.arange(1 << d)
    np.testing.assert_array_equal(fc.influences(fc.indicator(d, (x & 1) == 1)), [1, 0, 0, 0])
    odd = np.array([bin(v).count("1") % 2 == 1 for v in x])
    np.testing.assert_array_equal(fc.influences(fc.indicator(d, odd)), [1, 1, 1, 1])
    np.testing.assert_array_equal(fc.influences(fc.indicator(d, np.zeros(16, dtype=bool))), 0)


def test_noise_weighted_mass():
    q = 0.3
    assert fc.noise_weighted_mass(fc.walsh_function(5, 31), q) == pytest.approx(q**5)
    assert fc.noise_weighted_mass(fc.SpectralFunction.from_values(np.ones(8), 3), q) == 1.0
    x = np.arange(32)
    maj = np.array([1.0 if bin(v).count("1") >= 3 else -1.0 for v in x])
    c = coeffs_by_summation(maj, 5)
    expected = sum(0.5 ** bin(A).count("1") * c[A] ** 2 for A in range(32))
    assert fc.noise_weighted_mass(fc.SpectralFunction.from_values(maj, 5), 0.5) == pytest.approx(expected)
    # exact rational value from integer summation over all 32 x 32 terms
    assert expected == pytest.approx(769 / 2048, abs=1e-15)


@pytest.mark.parametrize("d,A", [(3, 0b111), (5, 0b10110), (6, 1)])
def test_poincare_equality_on_characters(d, A):
    out = fc.poincare_check(fc.walsh_function(d, A))
    assert out["lhs"] == pytest.approx(2.0)
    assert out["rhs"] == pytest.approx(2.0)


def test_poincare_high_frequency_function(rng):
    d = 6
    c = rng.standard_normal(1 << d)
    c[[A for A in range(1 << d) if bin(A).count("1") < 3]] = 0.0
    f = fc.SpectralFunction.from_coeffs(c, d)
    out = fc.poincare_check(f)
    assert out["min_freq"] == 3
    assert out["lhs"] <= 2 / 3 * fc.spectral_energy(f) + 1e-12


def test_min_frequency():
    f = fc.SpectralFunction.from_coeffs(np.array([0, 1, 0, 1.0]), 2)
    assert fc.min_frequency(f) == 1
    with pytest.raises(PreconditionError):
        fc.poincare_check(fc.SpectralFunction.from_values(np.ones(4), 2))


def test_enflo_bound_values():
    assert fc.enflo_lower_bound(4) == 2.0
    assert fc.enflo_lower_bound(1) == 1.0
    out = fc.enflo_gap(fc.walsh_function(3, 1))
    assert (out["lhs"], out["rhs"]) == (4.0, 4.0)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_enflo_and_poincare_hold(d, seed):
    v = np.random.default_rng(seed).standard_normal(1 << d)
    f = fc.SpectralFunction.from_values(v, d)
    assert fc.enflo_gap(f)["holds"]
    assert fc.poincare_check(f)["holds"]
    assert fc.poincare_check(f)["identity_residual"] <= 1e-10


@given(st.integers(1, 8), st.floats(0.01, 0.99))
def test_biased_weights_sum_to_one(d, eps):
    assert math.isclose(fc.biased_weights(d, eps).sum(), 1.0, abs_tol=1e-12)


def test_sampled_influences_close_to_exact():
    out = fc.sampled_influences(lambda x: (x & 1) == 1, 6, 4096, seed=3)
    est = np.asarray(out["influences"])
    assert est[0] == 1.0 and np.all(est[1:] == 0.0)
