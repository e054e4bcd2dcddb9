import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normgrid.errors import Infeasible, InvalidArgument
from normgrid.numkernel import (det_lu, lp_chebyshev, min_weighted_norm_solution, nnls,
                                sym_eig_extreme, weighted_dual_norm)


def test_det_lu_matches_cofactor():
    A = np.array([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]])
    # cofactor expansion along the first row
    cof = 2 * (3 * 4 - 1 * 1) - 1 * (1 * 4 - 0) + 0
    assert det_lu(A) == pytest.approx(cof)


def test_sym_eig_extreme_hermitian():
    A = np.array([[2.0, 1j], [-1j, 2.0]])
    lo, hi = sym_eig_extreme(A)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(3.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_nnls_kkt(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((8, 5))
    b = rng.standard_normal(8)
    x, r = nnls(A, b)
    g = A.T @ (A @ x - b)
    assert np.all(x >= 0)
    assert np.all(g >= -1e-8)
    assert np.max(np.abs(g * x)) <= 1e-8
    assert r == pytest.approx(np.linalg.norm(A @ x - b), abs=1e-10)


def _lp_vertices(V, a):
    """Oracle: enumerate vertices of {|V c| <= 1} in 2-D."""
    best = -np.inf
    rows = [(v, s) for v in V for s in (1.0, -1.0)]
    for (v1, s1), (v2, s2) in itertools.combinations(rows, 2):
        M = np.array([v1, v2])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        c = np.linalg.solve(M, [s1, s2])
        if np.all(np.abs(V @ c) <= 1 + 1e-9):
            best = max(best, float(a @ c))
    return best


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_lp_chebyshev_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((5, 2))
    a = rng.standard_normal(2)
    res = lp_chebyshev(V, a)
    assert res.value == pytest.approx(_lp_vertices(V, a), rel=1e-7, abs=1e-9)


def test_lp_chebyshev_unbounded_ray():
    res = lp_chebyshev([[1.0, 0.0]], [0.0, 1.0])
    assert res.unbounded and np.isinf(res.value)
    assert abs(res.ray[1]) > 0


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_min_weighted_norm_symmetric_case(p):
    sol = min_weighted_norm_solution([[1.0, 1.0]], [2.0], [0.5, 0.5], p)
    assert np.allclose(sol.weights, [1.0, 1.0])


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_min_weighted_norm_prefers_supported_column(p):
    sol = min_weighted_norm_solution([[1.0, 0.0]], [1.0], [0.5, 0.5], p)
    assert np.allclose(sol.weights, [1.0, 0.0], atol=1e-9)


def test_min_weighted_norm_inconsistent():
    with pytest.raises(Infeasible):
        min_weighted_norm_solution([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0], [1.0, 1.0], 2)


def test_min_weighted_norm_bad_p():
    with pytest.raises(InvalidArgument):
        min_weighted_norm_solution([[1.0]], [1.0], [1.0], 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_weighted_l2_solution_is_optimal(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 5))
    b = rng.standard_normal(2)
    mu = rng.uniform(0.1, 1.0, 5)
    sol = min_weighted_norm_solution(A, b, mu, 2)
    assert np.allclose(A @ sol.weights, b, atol=1e-9)
    # perturbing within the solution set never decreases the norm
    _, _, vt = np.linalg.svd(A)
    for z in vt[2:]:
        for t in (1e-3, -1e-3):
            assert weighted_dual_norm(sol.weights + t * z, mu, 2) >= sol.norm - 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, np.inf]))
def test_lp_norm_solutions_beat_random_feasible(seed, p):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((2, 4))
    b = rng.standard_normal(2)
    mu = np.full(4, 0.25)
    sol = min_weighted_norm_solution(A, b, mu, p)
    assert np.allclose(A @ sol.weights, b, atol=1e-8)
    _, _, vt = np.linalg.svd(A)
    base = np.linalg.lstsq(A, b, rcond=None)[0]
    for _ in range(50):
        lam = base + vt[2:].T @ rng.standard_normal(2)
        assert weighted_dual_norm(lam, mu, p) >= sol.norm - 1e-8
