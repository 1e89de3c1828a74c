import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairbayes.disparity import (DisparityCurve, empirical_disparity_curve, estimate_boundary_masses,
                                 estimate_delta_hat, estimate_t_hat, estimate_thresholds,
                                 group_thresholds, randomization, rho, safe_ratio)


def direct(e1, e0, t, l1=0.0, l0=0.0):
    """O(n) indicator average, written independently of the curve."""
    n1, n0 = len(e1), len(e0)
    n = n1 + n0
    g1 = sum(1 for v in e1 if v > 0.5 + n * t / (2 * n1) + l1) / n1
    g0 = sum(1 for v in e0 if v > 0.5 - n * t / (2 * n0) + l0) / n0
    return g1 - g0


def brute_inf(e1, e0, level, l1=0.0, l0=0.0):
    """inf{t >= 0 : D(t) < level}: D is constant between breakpoints, so probe
    each candidate and the midpoint of the gap to its right."""
    c = DisparityCurve(np.sort(e1), np.sort(e0), len(e1) + len(e0), l1, l0)
    cand = sorted({0.0, *[b for b in c.breakpoints if b > 0]})
    for t, nxt in zip(cand, cand[1:] + [cand[-1] + 2.0]):
        if direct(e1, e0, t, l1, l0) < level or direct(e1, e0, 0.5 * (t + nxt), l1, l0) < level:
            return t
    return cand[-1]


small_eta = st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.4, 0.5, 0.55, 0.6, 0.75, 0.9, 1.0])
                     | st.floats(0, 1), min_size=1, max_size=8)


def test_curve_matches_direct_sum_on_random_tiny_sets():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n1, n0 = rng.integers(1, 7, size=2)
        # coarse values force ties with thresholds
        e1 = rng.integers(0, 11, n1) / 10
        e0 = rng.integers(0, 11, n0) / 10
        l1, l0 = rng.choice([0.0, 0.05, 0.1], size=2)
        curve = empirical_disparity_curve(e1, e0, l1, l0)
        ts = np.concatenate([rng.uniform(-0.2, 1.5, 900), curve.breakpoints,
                             rng.choice(np.round(np.linspace(0, 1, 21), 2), 100 - len(curve.breakpoints))])
        for t in ts[:1000]:
            assert curve(t) == direct(e1, e0, t, l1, l0)


def test_hand_example_curve_values():
    c = empirical_disparity_curve([0.9, 0.6], [0.8, 0.7])
    assert c(0.0) == 0.0
    assert c(0.11) == -0.5
    flat = empirical_disparity_curve([0.5, 0.5], [0.5, 0.5])
    assert flat(0.0) == 0.0
    assert flat(0.2) == -1.0


def test_hand_example_t_hat():
    c = empirical_disparity_curve([0.9, 0.6], [0.8, 0.7])
    t_min, t_mid, t_max, t_hat = estimate_t_hat(c, 0.0, 0.25, 0.05)
    # 0.6 - 0.5 is one ulp below 0.1 in binary floating point
    assert t_min == 0.0
    assert (t_mid, t_max, t_hat) == pytest.approx((0.1, 0.1, 0.1), abs=1e-15)


def test_t_hat_zero_when_already_fair():
    c = empirical_disparity_curve([0.6, 0.7], [0.6, 0.8])
    assert c(0.0) < 0.1
    assert estimate_t_hat(c, 0.1, 0.05, 0.05) == (0.0, 0.0, 0.0, 0.0)


def test_empty_feasible_set_falls_back_to_largest_breakpoint():
    c = empirical_disparity_curve([0.9], [0.2])
    # the curve bottoms out at -1, never below -1.5
    assert c.infimum_below(-1.5) == pytest.approx(c.breakpoints.max())


def test_empty_group_rejected():
    with pytest.raises(ValueError, match="empty group"):
        empirical_disparity_curve([], [0.3])


@given(small_eta, small_eta, st.floats(-1, 1))
def test_infimum_matches_brute_force(e1, e0, level):
    c = empirical_disparity_curve(e1, e0)
    assert c.infimum_below(level) == brute_inf(e1, e0, level)


@given(small_eta, small_eta, st.lists(st.floats(-0.5, 2), min_size=2, max_size=30))
def test_curve_non_increasing(e1, e0, ts):
    c = empirical_disparity_curve(e1, e0)
    ts = sorted(ts)
    vals = [c(t) for t in ts]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(-1 <= v <= 1 for v in vals)


@given(small_eta, small_eta, st.floats(0, 0.3), st.floats(0, 0.3), st.floats(0, 0.2), st.floats(0, 1))
def test_offsets_weakly_decrease_curve(e1, e0, l1, l0, bump, t):
    base = empirical_disparity_curve(e1, e0, l1, l0)(t)
    assert empirical_disparity_curve(e1, e0, l1 + bump, l0)(t) <= base
    assert empirical_disparity_curve(e1, e0, l1, l0 + bump)(t) >= base


@given(small_eta, small_eta, st.floats(0, 1), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_candidate_ordering(e1, e0, delta, dn, rn):
    c = empirical_disparity_curve(e1, e0)
    t_min, t_mid, t_max, t_hat = estimate_t_hat(c, delta, dn, rn)
    assert 0 <= t_min <= t_mid <= t_max
    assert t_hat in (t_min, t_mid, t_max)


def test_continuous_curve_candidates_merge_as_width_shrinks():
    rng = np.random.default_rng(4)
    c = empirical_disparity_curve(rng.uniform(0.3, 1, 400), rng.uniform(0, 0.7, 400))
    # a level off the 1/400 step lattice, so the jump is unambiguous
    t_min, t_mid, t_max, _ = estimate_t_hat(c, 0.1003, 1e-9, 0.01)
    assert t_min == t_mid == t_max


def test_rho_and_ratio_conventions():
    assert rho(-0.5) == 0.0
    assert rho(0.3) == 0.3
    assert rho(7.0) == 1.0
    assert rho(math.inf) == 1.0 and rho(-math.inf) == 0.0
    assert rho(safe_ratio(7.0, 0.0)) == 0.0
    with pytest.raises(ValueError, match="undefined ratio"):
        rho(math.nan)


def test_boundary_masses_examples():
    assert estimate_boundary_masses([0.2, 0.5, 0.8], 0.5, 0.1) == pytest.approx((1 / 3, 1 / 3))
    assert estimate_boundary_masses([0.2, 0.7], 0.5, 0.0) == (0.5, 0.0)
    # the band (T - l, T + l] is empty at l = 0, exact ties included
    assert estimate_boundary_masses([0.5, 0.7], 0.5, 0.0) == (0.5, 0.0)
    assert estimate_boundary_masses([1.0, 1.0], 0.6, 0.1) == (1.0, 0.0)
    with pytest.raises(ValueError, match="empty group"):
        estimate_boundary_masses([], 0.5, 0.1)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.floats(0, 1), st.floats(0, 0.5))
def test_boundary_masses_are_subprobabilities(eta, T, l):
    p, q = estimate_boundary_masses(eta, T, l)
    assert 0 <= p <= 1 and 0 <= q <= 1 and p + q <= 1 + 1e-12


def test_delta_hat_examples():
    high = empirical_disparity_curve([0.9] * 10, [0.9] * 6 + [0.1] * 4)  # D(0) = 0.4
    low = empirical_disparity_curve([0.9] * 20, [0.9] * 19 + [0.1])      # D(0) = 0.05
    assert estimate_delta_hat(high, 0.1) == 0.1
    assert estimate_delta_hat(low, 0.1) == 0.0
    zero = empirical_disparity_curve([0.9], [0.9])
    assert estimate_delta_hat(zero, 0.0) == 0.0


def test_tau_hat_examples():
    assert randomization(0.25, 0.5, 0.5, 0.25, 0.0) == (0.0, 0.5)
    assert randomization(0.3, 0.0, 0.6, 0.0, 0.1) == (0.0, 0.0)
    assert randomization(0.4, 0.2, 0.4, 0.3, 0.0) == (0.0, 0.0)


@given(*[st.floats(0, 1)] * 4, st.floats(0, 1))
def test_tau_in_unit_square(a, b, c, d, delta):
    t0, t1 = randomization(a, b, c, d, delta)
    assert 0 <= t0 <= 1 and 0 <= t1 <= 1


def test_group_thresholds_use_half_factor():
    assert group_thresholds(0.1, 4, 2, 2) == pytest.approx((0.4, 0.6))
    assert group_thresholds(0.1, 10, 5, 5) == pytest.approx((0.4, 0.6))


def test_full_threshold_estimate_on_toy_sample():
    est = estimate_thresholds([0.9, 0.6], [0.8, 0.7], 0.0, 0.25, 0.05, l1=0.05, l0=0.05)
    assert est.t_hat == pytest.approx(0.1)
    assert est.T_hat == pytest.approx((0.4, 0.6))
    assert est.T_hat[1] >= 0.5 >= est.T_hat[0]
    assert est.pi_plus == pytest.approx((1.0, 0.5))
    assert est.pi_eq == pytest.approx((0.0, 0.5))
    assert est.delta_hat == 0.0
    assert est.tau_hat == pytest.approx((0.0, 1.0))
