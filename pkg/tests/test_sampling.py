import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normgrid.certify import brute_force_l2_ratio, certify_l2
from normgrid.errors import InvalidArgument
from normgrid.exact import WeightedRule
from normgrid.sampling import (chernoff_bound, monte_carlo_domain, plan_sample_size,
                               sample_and_certify_l1, sample_and_certify_l2, stratified_grid,
                               subset_select_discrete)
from normgrid.spaces import build_box, torus_grid, trig_span, trig_system


def test_chernoff_eta_zero_is_vacuous():
    assert chernoff_bound(7, 0.0, 50.0, "lower") == pytest.approx(7.0)


def test_chernoff_closed_form():
    expected = 10 * (math.e**0.5 / 1.5**1.5) ** 100
    assert chernoff_bound(10, 0.5, 100.0, "upper") == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(2.0e-4, rel=0.05)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1.0, 50.0), st.sampled_from(["lower", "upper"]))
def test_chernoff_monotone(eta, s, tail):
    assert chernoff_bound(5, eta, s + 1.0, tail) < chernoff_bound(5, eta, s, tail)


def test_plan_is_minimal():
    p = plan_sample_size(16, 1.0, 0.5, 0.1)
    assert p.m == 854
    assert max(p.lower_bound, p.upper_bound) <= 0.05
    q = plan_sample_size(16, 1.0, 0.5, 0.1)
    R = 16
    assert max(chernoff_bound(16, 0.5, (q.m - 1) / R, "lower"),
               chernoff_bound(16, 0.5, (q.m - 1) / R, "upper")) > 0.05


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 40), st.floats(0.05, 0.9), st.floats(0.01, 0.4))
def test_plan_monotone_in_delta(N, eps, delta):
    assert plan_sample_size(N, 1.0, eps, 2 * delta).m <= plan_sample_size(N, 1.0, eps, delta).m


def test_plan_halving_eps_about_four_times():
    a = plan_sample_size(16, 1.0, 0.5, 0.1).m
    b = plan_sample_size(16, 1.0, 0.25, 0.1).m
    assert 3.0 <= b / a <= 4.5


def test_plan_rejects_bad_args():
    with pytest.raises(InvalidArgument):
        plan_sample_size(4, 1.0, 1.5, 0.1)


def test_grid_mode_is_exact():
    s = trig_system(build_box([3]))
    _, c = sample_and_certify_l2(s, 7, seed=1, mode="grid")
    assert abs(c.C1 - 1) <= 1e-10 and abs(c.C2 - 1) <= 1e-10


def test_stratified_grid_needs_perfect_power():
    with pytest.raises(InvalidArgument):
        stratified_grid(10, 2, 0)


def test_constant_system_always_exact():
    _, c = sample_and_certify_l2(trig_span(0, "const", normalized=True), 5, seed=3)
    assert c.C1 == pytest.approx(1.0) and c.C2 == pytest.approx(1.0)


def test_n21_m2000_seed7():
    s = trig_system(build_box([10]))
    _, c = sample_and_certify_l2(s, 2000, seed=7)
    assert c.C1 >= 0.8 and c.C2 <= 1.2


def test_same_seed_same_points():
    s = trig_system(build_box([2]))
    a, ca = sample_and_certify_l2(s, 50, seed=11)
    b, cb = sample_and_certify_l2(s, 50, seed=11)
    assert a == b and ca.C1 == cb.C1


def test_eigen_constants_match_bruteforce_quadratic_forms():
    s = trig_span(1, "full", normalized=True)
    pts, c = sample_and_certify_l2(s, 12, seed=5)
    lo, hi = brute_force_l2_ratio(s, WeightedRule.equal_weight(pts), 10_000, 0)
    assert c.C1 <= lo + 1e-12 and hi <= c.C2 + 1e-12
    assert lo - c.C1 <= 1e-2 and c.C2 - hi <= 1e-2


def test_subset_full_set_is_exact():
    s = trig_system(build_box([2]))
    J, c = subset_select_discrete(s, 64, 3, 0, domain=torus_grid([64]))
    assert len(J) == 64 and abs(c.C1 - 1) <= 1e-10 and abs(c.C2 - 1) <= 1e-10


def test_subset_search_positive_and_trace_identity():
    s = trig_system(build_box([2]))
    J, c = subset_select_discrete(s, 20, 200, 0, domain=torus_grid([64]))
    assert c.C1 > 0 and c.C1 <= 1 <= c.C2


def test_subset_thread_invariance():
    s = trig_system(build_box([2]))
    a = subset_select_discrete(s, 20, 30, 9, domain=torus_grid([64]), threads=1)
    b = subset_select_discrete(s, 20, 30, 9, domain=torus_grid([64]), threads=3)
    assert np.array_equal(a[0], b[0]) and a[1].C1 == b[1].C1


def test_l1_dense_grid_close_to_one():
    s = trig_system(build_box([2]))
    from normgrid.certify import certify_l1
    c = certify_l1(s, WeightedRule.equal_weight(torus_grid([400])), 100, 0)
    assert 0.99 <= c.C1 <= c.C2 <= 1.01


def test_l1_sampling_reports_empirical():
    s = trig_system(build_box([2]))
    _, c = sample_and_certify_l1(s, 200, 0, probe_budget=50)
    assert c.empirical and c.C1 > 0


def test_monte_carlo_domain():
    s = trig_system(build_box([2]))
    md = monte_carlo_domain(s, 0.25, seed=3)
    assert 0.75 <= md.eig_min <= md.eig_max <= 1.25
    assert md.entry_error <= 0.25 / 5


def test_monte_carlo_constant_one_point():
    md = monte_carlo_domain(trig_span(0, "const", normalized=True), 0.5, seed=0)
    assert md.M == 1
