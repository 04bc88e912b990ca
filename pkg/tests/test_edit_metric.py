import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonembed import edit_metric as em
from nonembed import fourier_cube as fc
from nonembed.errors import CapacityError

bitstrings = st.text(alphabet="01", max_size=8)


def test_edit_distance_examples():
    assert em.edit_distance("0110", "0110") == 0
    assert em.edit_distance("0101", "101") == 1
    assert em.edit_distance_bfs("0101", "101") == 1
    assert em.edit_distance("01", "10") == 2
    assert em.edit_distance_bfs("01", "10") == 2


@given(bitstrings, bitstrings)
def test_three_implementations_agree(x, y):
    ed = em.edit_distance(x, y)
    assert ed == em.edit_distance_dp(x, y) == em.edit_distance_bfs(x, y)
    assert ed == em.edit_distance(y, x)


@given(st.integers(1, 64), st.data())
def test_shift_costs_at_most_two(d, data):
    x = em.BinaryString(data.draw(st.integers(0, 2**d - 1)), d)
    assert em.edit_distance(x, em.cyclic_shift(x)) <= 2
    assert em.cyclic_shift(x, d) == x
    assert em.cyclic_shift(x, 0) == x


def test_shift_direction():
    assert str(em.cyclic_shift("0001")) == "1000"
    assert str(em.cyclic_shift("1000")) == "0100"


def test_bfs_capacity():
    with pytest.raises(CapacityError):
        em.edit_distance_bfs("0" * 9, "1" * 9)


def brute_ball(d, r, center):
    count = 0
    for y in range(1 << d):
        if em.edit_distance_dp(em.BinaryString(center, d), em.BinaryString(y, d)) == r:
            count += 1
    return count


def test_ball_counts_against_dp_enumeration():
    out = em.ball_count_check(6, 1)
    assert out["bound"] == 24 and out["holds"]
    assert em.ball_count_check(4, 0)["max_count"] == 1
    # exactly r steps in the insert/delete graph vs. strings at edit distance exactly r
    worst = max(brute_ball(6, 2, c) for c in range(64))
    assert worst == em.ball_count_check(6, 2)["max_count"]
    assert em.ball_count_check(8, 2)["holds"]


def test_average_d1_exhaustive():
    out = em.average_ed_estimate(1, 100, seed=0)
    assert out["exhaustive"] and out["exact_mean"] == 1


def test_average_small_d_exhaustive_matches_dp():
    d = 3
    total = sum(em.edit_distance_dp(em.BinaryString(x, d), em.BinaryString(y, d))
                for x in range(8) for y in range(8))
    assert em.average_ed_estimate(d, 100, seed=0)["exact_mean"] == Fraction(total, 64)


def test_average_d64_and_determinism():
    a = em.average_ed_estimate(64, 10000, seed=7)
    b = em.average_ed_estimate(64, 10000, seed=7)
    assert a == b
    assert a["pass"] and a["mean"] - a["ci99"] >= 0.4


def test_tau_sampler_zero_noise():
    for s in em.tau_sampler(40, 0.1, 10, seed=1, samples=500, zero_noise=True):
        assert s.y == 0 and s.ed <= 2 * s.j


def test_tau_sampler_full_shift():
    for s in em.tau_sampler(12, 0.2, 12, seed=2, samples=300):
        assert s.ed <= 2 * s.y.bit_count() + 2 * s.j


def test_tau_mean_d64():
    out = em.tau_mean(64, 0.125, 8, 10000, seed=3)
    assert out["pass"]
    assert out["mean"] <= out["four_eps_d"] + out["ci99"]


@pytest.mark.parametrize("eps", [0.125, 0.25])
def test_beckner_parity_closed_form(eps):
    d = 6
    out = em.beckner_shift_identity(fc.walsh_function(d, (1 << d) - 1), eps, 2)
    assert out["integral"] == pytest.approx(1 - (1 - 2 * eps) ** d, abs=1e-12)
    assert out["holds"]


def test_beckner_dictator_and_constant():
    out = em.beckner_shift_identity(fc.walsh_function(5, 1), 0.25, 1)
    assert out["integral"] == pytest.approx(1.0, abs=1e-12)
    const = fc.SpectralFunction.from_values(np.ones(16), 4)
    assert em.beckner_shift_identity(const, 0.25, 3)["integral"] == 0.0


@given(st.integers(2, 9), st.sampled_from([0.125, 0.25]), st.integers(0, 2**32 - 1))
def test_beckner_identity_random(d, eps, seed):
    rng = np.random.default_rng(seed)
    v = rng.choice([-1.0, 1.0], size=1 << d)
    out = em.beckner_shift_identity(fc.SpectralFunction.from_values(v, d), eps, int(rng.integers(1, d + 1)))
    assert out["residual"] <= 1e-9 and out["relaxation_holds"]


def test_edit_bound_clamped_below_regime():
    rows = em.edit_bound_profile([32, 64, 1024])
    for row in rows:
        assert row["value"] >= 1.0
        assert not row["in_regime"]
    assert rows[0]["raw"] < 0 and rows[0]["clamped"]


def test_edit_bound_is_pure_number():
    a = em.edit_theorem_bound(2**20, 0.05)
    b = em.edit_theorem_bound(2**30, 0.05)
    assert a["raw"] == b["raw"]
    assert math.isfinite(a["raw"])
