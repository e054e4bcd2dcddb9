import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normgrid.errors import InvalidArgument
from normgrid.spaces import PointSet, torus_grid
from normgrid.universal import (NetParams, build_hammersley_net, certify_universal, compositions,
                                dispersion, dispersion_bruteforce,
                                dispersion_implies_universal_check, dyadic_collection,
                                radical_inverse2, sparse_box, sparse_collection,
                                universal_implies_dispersion_check, universal_random_for_sparse,
                                verify_net)


def test_compositions_count():
    assert len(list(compositions(3, 2))) == 4
    assert len(list(compositions(4, 3))) == math.comb(6, 2)


def test_dyadic_collection_size():
    assert len(dyadic_collection(3, 2)) == 4
    assert len(dyadic_collection(5, 3)) == math.comb(7, 2)


def test_sparse_box_size():
    assert len(sparse_box(3, 2)) == 7**2


def test_sparse_collection_enumerated_and_sampled():
    c = sparse_collection(2, 3, 1)
    assert len(c) == math.comb(7, 2) and c.params["mode"] == "enumerated"
    c = sparse_collection(5, 4, 2, sample_count=10, seed=1)
    assert len(c) == 10 and c.params["mode"] == "sampled"
    assert all(len(m) == 5 for m in c.members)


def test_dispersion_trivial_cases():
    assert dispersion(np.zeros((0, 2))) == 1.0
    assert dispersion(np.array([[0.5, 0.5]])) == 0.5
    assert dispersion(np.array([[0.25]])) == 0.75


def test_dispersion_rejects_out_of_cube():
    with pytest.raises(InvalidArgument):
        dispersion(np.array([[1.0, 0.2]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3), st.booleans())
def test_dispersion_matches_bruteforce(seed, d, lattice):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, {1: 40, 2: 30, 3: 10}[d] + 1))
    T = rng.random((n, d))
    if lattice:
        T = np.floor(T * 4) / 4
    assert dispersion(T) == dispersion_bruteforce(T)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_dispersion_decreases_when_adding_points(seed):
    rng = np.random.default_rng(seed)
    T = rng.random((10, 2))
    assert dispersion(np.vstack([T, rng.random((3, 2))])) <= dispersion(T)


def test_radical_inverse():
    assert radical_inverse2(np.arange(4), 2).tolist() == [0.0, 0.5, 0.25, 0.75]


@pytest.mark.parametrize("r", range(0, 13))
def test_hammersley_is_net(r):
    ok, box = verify_net(build_hammersley_net(r), NetParams(0, r, 2))
    assert ok and box is None


def test_perturbed_net_fails_with_box():
    P = build_hammersley_net(4).points.copy()
    P[3] = [P[3, 0], (P[3, 1] + 0.5) % 1.0]
    ok, box = verify_net(P, NetParams(0, 4, 2))
    assert not ok
    assert box["count"] != box["expected"]
    inside = np.all((P >= box["lower"]) & (P < box["upper"]), axis=1).sum()
    assert inside == box["count"]


def test_net_size_check():
    with pytest.raises(InvalidArgument):
        verify_net(np.zeros((3, 2)), NetParams(0, 2, 2))


def test_tensor_grid_universal_l2():
    col = dyadic_collection(3, 2)
    rep = certify_universal(col, torus_grid([16, 16]), 2)
    assert abs(rep["worst_C1"] - 1) <= 1e-10 and abs(rep["worst_C2"] - 1) <= 1e-10
    assert rep["failures"] == []


def test_too_small_set_reports_infinite_ratio():
    col = dyadic_collection(2, 2)
    rep = certify_universal(col, build_hammersley_net(2), math.inf)
    assert math.isinf(rep["worst_ratio"]) and rep["worst_C1"] == 0.0


def test_hammersley_finite_ratio_some_c():
    rep = dispersion_implies_universal_check(build_hammersley_net(5), c_max=3)
    assert rep["smallest_c"] is not None
    finite = [row for row in rep["sweep"] if math.isfinite(row["worst_ratio"])]
    assert finite


def test_universal_implies_dispersion():
    rep = universal_implies_dispersion_check(build_hammersley_net(5), 2)
    assert rep["universal"] and rep["holds"]
    assert rep["fitted_C"] == pytest.approx(rep["dispersion"] * 4)


def test_random_sparse_report():
    rep = universal_random_for_sparse(2, 3, 1, 2, 200, seed=3)
    assert rep["collection"]["size"] == 21
    assert 0 < rep["worst_C1"] <= 1 <= rep["worst_C2"]
    assert 0.0 <= rep["failure_fraction"] <= 1.0


def test_random_sparse_deterministic():
    a = universal_random_for_sparse(2, 3, 1, 2, 50, seed=4)
    b = universal_random_for_sparse(2, 3, 1, 2, 50, seed=4)
    assert a == b
