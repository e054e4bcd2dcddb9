"""Randomized discretization: matrix Chernoff planning, iid sampling with
certification, subset search on finite domains, Monte Carlo domains.

All randomness derives from one explicit integer seed; independent trials
use :func:`normgrid.config.child_seed` streams so results do not depend on
evaluation order or thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .certify import DiscretizationCertificate, certify_l2, l1_probe_bounds
from .config import DEFAULT_TOL, Tolerances, child_seed, resolve_threads
from .errors import InvalidArgument, NumericalFailure
from .exact import WeightedRule
from .numkernel import sym_eig_extreme
from .spaces import (TWO_PI, FunctionSystem, PointSet, tabulated_system,
                     wrap_torus)


def _tail_rate(eta: float, tail: str) -> float:
    """-log of the per-unit Chernoff base for the given tail."""
    if tail == "lower":
        if not (0.0 <= eta < 1.0):
            raise InvalidArgument("lower tail needs eta in [0, 1)")
        return eta + (1.0 - eta) * math.log1p(-eta)
    if tail == "upper":
        if eta < 0.0:
            raise InvalidArgument("upper tail needs eta >= 0")
        return (1.0 + eta) * math.log1p(eta) - eta
    raise InvalidArgument("tail must be 'lower' or 'upper'")


def chernoff_bound(N: int, eta: float, s_over_R: float, tail: str) -> float:
    """N (e^-eta / (1-eta)^(1-eta))^(s/R) or N (e^eta / (1+eta)^(1+eta))^(s/R).

    Examples
    --------
    >>> chernoff_bound(10, 0.0, 100.0, "upper")
    10.0
    """
    return float(N * math.exp(-_tail_rate(eta, tail) * s_over_R))


@dataclass
class SamplePlan:
    N: int
    t: float
    eps: float
    delta: float
    m: int
    lower_bound: float
    upper_bound: float
    constant: float

    def to_json(self) -> dict:
        return asdict(self)


def plan_sample_size(N: int, t: float, eps: float, delta: float) -> SamplePlan:
    """Smallest m with both Chernoff tails at most delta/2 (s_min = s_max = m, R = N t^2).

    ``constant`` is C in m = C (t^2/eps^2) N log(2N/delta), up to rounding.
    """
    if not (0 < eps < 1) or not (0 < delta < 1):
        raise InvalidArgument("eps and delta must lie in (0, 1)")
    if N < 1 or t <= 0:
        raise InvalidArgument("N must be positive and t > 0")
    R = N * t * t
    rate = min(_tail_rate(eps, "lower"), _tail_rate(eps, "upper"))
    m = max(1, math.ceil(R * math.log(2 * N / delta) / rate))

    def ok(k: int) -> bool:
        return (chernoff_bound(N, eps, k / R, "lower") <= delta / 2
                and chernoff_bound(N, eps, k / R, "upper") <= delta / 2)

    while m > 1 and ok(m - 1):
        m -= 1
    while not ok(m):
        m += 1
    const = m / ((t * t / eps**2) * N * math.log(2 * N / delta))
    return SamplePlan(N, t, eps, delta, m,
                      chernoff_bound(N, eps, m / R, "lower"),
                      chernoff_bound(N, eps, m / R, "upper"), const)


def uniform_torus_sample(m: int, d: int, seed: int) -> PointSet:
    rng = np.random.default_rng(seed)
    return PointSet(d, wrap_torus(TWO_PI * rng.random((m, d))), "torus")


def stratified_grid(m: int, d: int, seed: int) -> PointSet:
    """Uniform tensor grid with m^(1/d) nodes per axis and a seeded random shift."""
    side = round(m ** (1.0 / d))
    if side**d != m:
        raise InvalidArgument(f"grid mode needs m to be a perfect {d}-th power")
    rng = np.random.default_rng(seed)
    shift = rng.random(d) * TWO_PI / side
    axes = [TWO_PI * np.arange(side) / side + shift[j] for j in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(d, wrap_torus(np.stack([g.ravel() for g in mesh], axis=1)), "torus")


def sample_and_certify_l2(system: FunctionSystem, m: int, seed: int, mode: str = "iid",
                          tol: Tolerances = DEFAULT_TOL) -> tuple[PointSet, DiscretizationCertificate]:
    """Draw m points and certify the equal-weight rule in L2 by eigenvalues."""
    if m < 1:
        raise InvalidArgument("m must be positive")
    if system.domain != "torus":
        raise InvalidArgument("sampling is defined on the torus")
    if mode == "iid":
        pts = uniform_torus_sample(m, system.dim, seed)
    elif mode == "grid":
        pts = stratified_grid(m, system.dim, seed)
    else:
        raise InvalidArgument("mode must be 'iid' or 'grid'")
    cert = certify_l2(system, WeightedRule.equal_weight(pts), tol)
    cert.seed = seed
    cert.extra["mode"] = mode
    return pts, cert


def _subset_gram(V: np.ndarray, J: np.ndarray) -> np.ndarray:
    W = V[J]
    return (np.conj(W).T @ W) / len(J)


def subset_select_discrete(system: FunctionSystem, m: int, trials: int, seed: int,
                           domain: PointSet | None = None, threads: int | None = None,
                           tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, DiscretizationCertificate]:
    """Best of ``trials`` random m-subsets of a finite domain, by min(C1, 2 - C2).

    The subset rule has equal weights 1/m, i.e. the uniform measure 1/M on
    the domain rescaled by M/m.  Ties go to the earliest trial.
    """
    if domain is None:
        if system.domain != "tabulated":
            raise InvalidArgument("a finite domain is required")
        pts = system.tab_points
        frame = system.meta.get("frame", "torus")
    else:
        pts = domain.points
        frame = domain.frame
    M = pts.shape[0]
    if not (1 <= m <= M):
        raise InvalidArgument("need 1 <= m <= M")
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    V = system(pts)

    def run(k: int):
        rng = np.random.default_rng(child_seed(seed, k))
        J = np.sort(rng.choice(M, size=m, replace=False))
        lo, hi = sym_eig_extreme(_subset_gram(V, J), tol)
        return min(lo, 2.0 - hi), k, J, lo, hi

    workers = resolve_threads(threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, range(trials)))
    else:
        results = [run(k) for k in range(trials)]
    score, k, J, lo, hi = max(results, key=lambda r: (r[0], -r[1]))
    if abs(lo) <= tol.eigen:
        lo = 0.0
    cert = DiscretizationCertificate(2, m, system.n_funcs, lo, hi, "eigen_exact", False, seed,
                                     tol.as_dict(),
                                     abs(lo - 1) <= tol.exactness and abs(hi - 1) <= tol.exactness,
                                     {"M": M, "trials": trials, "best_trial": k, "score": score,
                                      "frame": frame})
    return J, cert


def sample_and_certify_l1(system: FunctionSystem, m: int, seed: int, probe_budget: int = 200,
                          oversample: int | None = None, tol: Tolerances = DEFAULT_TOL
                          ) -> tuple[PointSet, DiscretizationCertificate]:
    """Draw m iid points; empirical one-sided L1 constants from probe functions."""
    if system.n_funcs == 0:
        raise InvalidArgument("empty span")
    if m < 1:
        raise InvalidArgument("m must be positive")
    pts = uniform_torus_sample(m, system.dim, seed)
    lo, hi, info = l1_probe_bounds(system, pts.points, np.full(m, 1.0 / m), probe_budget,
                                   seed, oversample)
    info["semantics"] = "empirical-bounds-only"
    cert = DiscretizationCertificate(1, m, system.n_funcs, lo, hi, "empirical_probe", True, seed,
                                     tol.as_dict(), False, info)
    return pts, cert


@dataclass
class MonteCarloDomain:
    system: FunctionSystem
    points: PointSet
    M: int
    entry_error: float
    eig_min: float
    eig_max: float
    rounds: int

    def to_json(self) -> dict:
        return {"M": self.M, "entry_error": self.entry_error, "eig_min": self.eig_min,
                "eig_max": self.eig_max, "rounds": self.rounds,
                "points": self.points.to_json()}


def monte_carlo_domain(system: FunctionSystem, delta: float, seed: int, M0: int = 1,
                       max_rounds: int = 24, max_points: int = 2**22,
                       tol: Tolerances = DEFAULT_TOL) -> MonteCarloDomain:
    """Finite domain Omega_M whose uniform measure reproduces all products u_i u_k.

    Draw M iid points, doubling M until every entry of the discrete Gram
    matrix is within delta/N of the identity; then
    | ||f||^2_{L2(Omega_M)} - ||f||_2^2 | <= delta ||f||_2^2 on the span,
    which is confirmed by the discrete Gram eigenvalues.
    """
    if delta <= 0:
        raise InvalidArgument("delta must be positive")
    if system.domain != "torus":
        raise InvalidArgument("Monte Carlo domains are drawn on the torus")
    N = system.n_funcs
    G0 = system.gram()
    probe = system(system.integration_rule(4)[0].points)
    if not np.all(np.isfinite(np.mean(np.abs(probe) ** 4, axis=0))):
        raise InvalidArgument("basis functions need finite fourth moments")
    target = delta / N
    M = max(1, M0)
    best = math.inf
    for r in range(max_rounds):
        pts = uniform_torus_sample(M, system.dim, child_seed(seed, r))
        V = system(pts.points)
        Gd = (np.conj(V).T @ V) / M
        err = float(np.max(np.abs(Gd - G0)))
        best = min(best, err)
        if err <= target:
            lo, hi = sym_eig_extreme(Gd, tol)
            tab = tabulated_system(pts, V, orthonormal=False)
            return MonteCarloDomain(tab, pts, M, err, lo, hi, r + 1)
        if 2 * M > max_points:
            break
        M *= 2
    raise NumericalFailure(f"no domain reached entry error {target:.3g}; best {best:.3g}",
                           residual=best * N)
