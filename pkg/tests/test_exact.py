import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import exact_rule_corpus
from normgrid.errors import InvalidArgument, SpanDeficiency
from normgrid.exact import (WeightedRule, build_recovery, eigen_range, exact_cubature,
                            exact_weighted_discretization, grid_cardinality, gram_of_rule,
                            lift_even_q, lift_size, lq_power_integral, moment_residual,
                            positive_exact_lq, recovery_from_exact_l2, satisfies_node_count_law,
                            select_nodes_by_determinant, stable_exact_weights,
                            tchakaloff_compress, tchakaloff_probability)
from normgrid.spaces import (TWO_PI, PointSet, build_box, canonical_grid, torus_grid, trig_span,
                             trig_system)


def pts(*xs):
    return PointSet(1, np.array(xs, dtype=float).reshape(-1, 1), "torus")


def span(parts, keep=None, degree=1):
    s = trig_span(degree, parts)
    return s.subsystem(keep) if keep is not None else s


# -- node selection -------------------------------------------------------------

def test_constant_span_one_node():
    nodes = select_nodes_by_determinant(span("const"), pts(0.3, 1.0))
    assert len(nodes) == 1


def test_one_cos_picks_zero_and_pi():
    nodes = select_nodes_by_determinant(span("cos"), pts(0.0, math.pi / 2, math.pi))
    assert sorted(nodes.points.ravel()) == [0.0, math.pi]


def test_one_sin_span_deficiency():
    with pytest.raises(SpanDeficiency) as exc:
        select_nodes_by_determinant(span("full", [0, 2]), pts(0.0, math.pi))
    assert exc.value.step == 2


def test_recovery_lagrange_functions():
    rec = build_recovery(span("cos"), pts(0.0, math.pi))
    x = np.linspace(0, 6, 7).reshape(-1, 1)
    psi = rec.psi(x)
    assert np.allclose(psi[:, 0], (1 + np.cos(x[:, 0])) / 2)
    assert np.allclose(psi[:, 1], (1 - np.cos(x[:, 0])) / 2)


def test_recovery_reproduces_random_polynomials():
    sys_ = trig_system(build_box([2]))
    nodes = pts(*(TWO_PI * np.arange(5) / 5 + 0.1))
    rec = build_recovery(sys_, nodes)
    probes = torus_grid([37]).points
    C = np.random.default_rng(0).standard_normal((10, 5))
    assert rec.reproduction_error(probes, C) <= 1e-8


# -- cubature ---------------------------------------------------------------------

def test_cubature_one_sin_forced_weights():
    rule = exact_cubature(span("full", [0, 2]), pts(0.0, math.pi / 2))
    got = dict(zip(rule.points.ravel().tolist(), rule.weights.tolist()))
    assert got[0.0] == pytest.approx(1.0)
    assert abs(got[math.pi / 2]) <= 1e-12


@pytest.mark.parametrize("parts", ["const", "cos", "full"])
def test_cubature_moments(parts):
    s = span(parts)
    rule = exact_cubature(s)
    assert len(rule) <= s.n_funcs
    assert moment_residual(s, rule) <= 1e-10


# -- lifting and even q -----------------------------------------------------------

@pytest.mark.parametrize("N,q,M", [(2, 2, 3), (3, 2, 6), (2, 4, 5)])
def test_lift_size(N, q, M):
    assert lift_size(N, q) == M


def test_lift_even_q_rejects_odd():
    with pytest.raises(InvalidArgument):
        lift_even_q(span("cos"), 3)


def test_sincos_q2_parseval():
    s = trig_span(1, "sincos")
    rule = exact_weighted_discretization(s, 2)
    assert len(rule) <= 3
    for a, b in [(1.0, 0.0), (0.3, -2.0), (1.5, 1.5)]:
        v = rule.weights @ (a * np.sin(rule.points[:, 0]) + b * np.cos(rule.points[:, 0])) ** 2
        assert v == pytest.approx((a * a + b * b) / 2, rel=1e-10)


def test_box1_q4_against_dense_grid():
    s = trig_system(build_box([1]))
    rule = exact_weighted_discretization(s, 4)
    assert len(rule) <= lift_size(3, 4) == 15
    C = np.random.default_rng(1).standard_normal((20, 3))
    ref = lq_power_integral(s, C, 4)
    got = rule.weights @ (s(rule.points) @ C.T) ** 4
    assert np.max(np.abs(got - ref) / np.abs(ref)) <= 1e-7


def test_q2_rule_gram_is_identity():
    s = trig_system(build_box([1, 1]))
    rule = exact_weighted_discretization(s, 2)
    assert np.max(np.abs(gram_of_rule(s, rule) - np.eye(s.n_funcs))) <= 1e-7


# -- positive rules --------------------------------------------------------------

def test_tchakaloff_compresses_large_rule():
    s = span("cos")
    big = WeightedRule.equal_weight(torus_grid([100]))
    out = tchakaloff_compress(s, big)
    assert len(out) <= 2
    assert out.weights.min() >= 0
    assert moment_residual(s, out) <= 1e-10


def test_tchakaloff_single_node_unchanged():
    s = span("const")
    out = tchakaloff_compress(s, WeightedRule.equal_weight(pts(1.0)))
    assert len(out) == 1 and out.weights[0] == pytest.approx(1.0)


def test_tchakaloff_full_from_grid():
    s = span("full")
    out = tchakaloff_compress(s, candidates=torus_grid([64]))
    assert len(out) <= 3 and out.weights.min() >= 0
    assert moment_residual(s, out) <= 1e-8


@pytest.mark.parametrize("parts,keep,cap", [("const", None, 1), ("cos", [1], 2), ("sincos", None, 3)])
def test_tchakaloff_probability_variants(parts, keep, cap):
    s = span(parts, keep)
    rule = tchakaloff_probability(s)
    assert len(rule) <= cap
    assert abs(math.fsum(rule.weights) - 1) <= 1e-10
    assert moment_residual(s, rule) <= 1e-8


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_tchakaloff_does_not_increase_total_weight(seed):
    s = trig_system(build_box([2]))
    rng = np.random.default_rng(seed)
    nodes = PointSet(1, np.sort(rng.random((40, 1)) * TWO_PI, axis=0), "torus")
    w = rng.random(40)
    rule = WeightedRule(nodes, w / w.sum(), ("positive",))
    out = tchakaloff_compress(s, rule)
    assert out.weights.min() >= -1e-12
    assert np.sum(np.abs(out.weights)) <= np.sum(rule.weights) + 1e-8
    assert len(out) <= s.n_funcs


@pytest.mark.parametrize("parts,q,cap", [("sincos", 2, 3), ("const", 4, 1), ("cos", 2, 3)])
def test_positive_exact_lq(parts, q, cap):
    s = span(parts)
    rule = positive_exact_lq(s, q)
    assert len(rule) <= cap and rule.weights.min() >= 0
    C = np.random.default_rng(0).standard_normal((10, s.n_funcs))
    ref = lq_power_integral(s, C, q)
    got = rule.weights @ (s(rule.points) @ C.T) ** q
    assert np.allclose(got, ref, rtol=1e-8)


# -- stable weights --------------------------------------------------------------

def test_stable_weights_on_grid_p2():
    s = trig_system(build_box([2]))
    W = canonical_grid([2])
    sw = stable_exact_weights(s, W, np.full(5, 0.2), 2)
    assert np.allclose(sw.weights, 0.2)
    assert sw.stability_norm == pytest.approx(1.0)


def test_stable_weights_single_point():
    sw = stable_exact_weights(span("const"), pts(0.5), [1.0], 2)
    assert sw.weights[0] == pytest.approx(1.0) and sw.stability_norm == pytest.approx(1.0)


@pytest.mark.parametrize("p", [1, 2, math.inf])
def test_stable_weights_norm_below_measured_constant(p):
    s = span("full")
    rng = np.random.default_rng(4)
    W = PointSet(1, np.sort(rng.random((20, 1)) * TWO_PI, axis=0), "torus")
    sw = stable_exact_weights(s, W, np.full(20, 1 / 20), p)
    assert sw.ok and sw.stability_norm <= sw.measured_c1 + 1e-6
    assert moment_residual(s, WeightedRule(W, sw.weights)) <= 1e-8


# -- recovery from exact L2 rules and the node count law --------------------------

def test_recovery_from_grid_rule():
    s = trig_system(build_box([2]))
    rule = WeightedRule.equal_weight(canonical_grid([2]))
    rec = recovery_from_exact_l2(rule, s)
    assert rec.reproduction_error(torus_grid([23]).points) <= 1e-9


def test_eigen_range_on_grid():
    s = trig_system(build_box([1, 1]))
    lo, hi = eigen_range(s, WeightedRule.equal_weight(canonical_grid([1, 1])))
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)


def test_node_count_law_over_corpus():
    violations = [(N, name, len(r)) for N, name, r in exact_rule_corpus()
                  if not satisfies_node_count_law(r, N)]
    assert violations == []


def test_grid_cardinality():
    assert grid_cardinality([2, 1]) == 15


def test_weighted_rule_json_roundtrip():
    r = exact_cubature(span("full"))
    back = WeightedRule.from_json(r.to_json())
    assert np.array_equal(back.weights, r.weights)
    assert back.nodes == r.nodes


def test_weighted_rule_tag_validation():
    with pytest.raises(InvalidArgument):
        WeightedRule(pts(0.0, 1.0), [1.5, -0.5], ("positive",))
    with pytest.raises(InvalidArgument):
        WeightedRule(pts(0.0, 1.0), [0.2, 0.2], ("probability",))
