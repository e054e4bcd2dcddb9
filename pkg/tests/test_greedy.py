import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normgrid.certify import certify_l2
from normgrid.errors import Infeasible
from normgrid.exact import gram_of_rule, is_l2_exact
from normgrid.greedy import gram_atom, oga_exact_l2, rga_bound, rga_equal_weight
from normgrid.spaces import build_box, torus_grid, trig_span, trig_system


def test_gram_atom_examples():
    assert np.allclose(gram_atom(trig_span(0, "const"), [1.3]), [[1.0]])
    g = gram_atom(trig_span(1, "sincos", normalized=True), [0.0])
    assert np.allclose(g, [[2.0, 0.0], [0.0, 0.0]])


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 6.28))
def test_atom_trace_condition_e(x):
    s = trig_system(build_box([2]))
    assert np.trace(gram_atom(s, [x])) <= s.n_funcs * 1.0**2 + 1e-12


def test_oga_constant_one_step():
    res = oga_exact_l2(trig_span(0, "const", normalized=True), torus_grid([4]))
    assert res.iterations == 1 and res.residual_norms[-1] <= 1e-12


def test_oga_sincos_on_64_grid():
    s = trig_span(1, "sincos", normalized=True)
    res = oga_exact_l2(s, torus_grid([64]))
    assert len(res.rule) <= 3 and res.residual_norms[-1] <= 1e-7
    assert is_l2_exact(s, res.rule, 1e-7)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_oga_residual_monotone_and_orthogonal(N):
    s = trig_system(build_box([N]))
    res = oga_exact_l2(s, torus_grid([4 * (2 * N + 1)]))
    r = np.array(res.residual_norms)
    assert np.all(np.diff(r) <= 1e-12)
    V = s(res.rule.points)
    R = np.eye(s.n_funcs) - gram_of_rule(s, res.rule)
    # projection residual is orthogonal to every selected atom
    inner = np.einsum("mi,ij,mj->m", V, R, V)
    assert np.max(np.abs(inner)) <= 1e-9


def test_oga_eigen_sandwich():
    s = trig_system(build_box([2]))
    res = oga_exact_l2(s, torus_grid([20]))
    c = certify_l2(s, res.rule)
    delta = res.residual_norms[-1]
    assert 1 - delta - 1e-12 <= c.C1 <= c.C2 <= 1 + delta + 1e-12


def test_oga_stalls_on_poor_candidates():
    s = trig_system(build_box([2]))
    with pytest.raises(Infeasible):
        oga_exact_l2(s, torus_grid([2]))


def test_rga_constant_exact_after_one_step():
    res = rga_equal_weight(trig_span(0, "const", normalized=True), torus_grid([3]), 1)
    assert res.residual_norms[0] == pytest.approx(0.0, abs=1e-14)


def test_rga_bound_values():
    assert rga_bound(4) == 1.0


def test_rga_guarantee_small_run():
    s = trig_system(build_box([2]))
    res = rga_equal_weight(s, torus_grid([25]), 200, t=1.0)
    assert all(e <= rga_bound(k) for k, e in enumerate(res.residual_norms, start=1))


def test_rga_m_16n2_certifies():
    s = trig_system(build_box([2]))
    res = rga_equal_weight(s, torus_grid([25]), 16 * 25, t=1.0)
    c = certify_l2(s, res.rule)
    assert c.C1 >= 0.5 and c.C2 <= 1.5
