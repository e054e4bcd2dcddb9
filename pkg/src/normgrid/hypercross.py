"""Recursive sampling sets W(N, d) for hyperbolic cross polynomials in the uniform norm.

W(N, 1) is a uniform grid of about 4N points.  For d >= 2,

    W(N, d) = union over j of { x : x_j in V_M, x with coordinate j removed in W(N, d-1) },

where V_M = {2 pi k / M} and M is the smallest integer with
C0 M^-d N (ln N)^(d-1) <= eps.  Coordinates are tracked as exact fractions
of 2 pi, so duplicates are removed without tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .certify import certify_linfty, linfty_lp_ratio, reference_grid
from .config import child_seed
from .errors import InvalidArgument
from .spaces import TWO_PI, FunctionSystem, PointSet, build_hyperbolic, trig_system

EXACT_LP_MAX_REF = 4000


def alpha_beta(d: int) -> tuple[float, float]:
    """alpha_d = sum_{j<=d} 1/j and beta_d = d - alpha_d.

    Examples
    --------
    >>> alpha_beta(2)
    (1.5, 0.5)
    """
    if d < 1:
        raise InvalidArgument("d must be positive")
    a = math.fsum(1.0 / j for j in range(1, d + 1))
    return a, d - a


def build_vm(M: int) -> PointSet:
    """V_M = {2 pi j / M : j = 0..M-1} on the circle."""
    if M < 1:
        raise InvalidArgument("M must be positive")
    return PointSet(1, (TWO_PI * np.arange(M) / M).reshape(-1, 1), "torus")


@dataclass(frozen=True)
class HypercrossSetParams:
    N: int
    d: int
    eps: float = 0.1
    C0: float | dict = 4.0
    base_grid_factor: float = 4.0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgument("d must be positive")
        if self.N < 2:
            raise InvalidArgument("N must be at least 2")
        if not (0 < self.eps < 0.125):
            raise InvalidArgument("eps must lie in (0, 1/8)")
        if self.base_grid_factor <= 0:
            raise InvalidArgument("base_grid_factor must be positive")

    def c0(self, d: int) -> float:
        if isinstance(self.C0, dict):
            return float(self.C0[d])
        return float(self.C0)


def minimal_m(N: int, d: int, eps: float, C0: float) -> int:
    """Smallest M with C0 M^-d N (ln N)^(d-1) <= eps."""
    lhs = C0 * N * math.log(N) ** (d - 1)
    M = max(1, math.ceil((lhs / eps) ** (1.0 / d)))
    while M > 1 and C0 * (M - 1) ** (-d) * N * math.log(N) ** (d - 1) <= eps:
        M -= 1
    while C0 * M ** (-d) * N * math.log(N) ** (d - 1) > eps:
        M += 1
    return M


@dataclass
class HypercrossSet:
    points: PointSet
    keys: list[tuple[Fraction, ...]]
    meta: dict = field(default_factory=dict)


def _build_keys(params: HypercrossSetParams, d: int, log: dict) -> list[tuple[Fraction, ...]]:
    if d == 1:
        n = math.ceil(params.base_grid_factor * params.N)
        keys = [(Fraction(j, n),) for j in range(n)]
        log["sizes"][1] = len(keys)
        return keys
    prev = _build_keys(params, d - 1, log)
    M = minimal_m(params.N, d, params.eps, params.c0(d))
    log["M_sequence"][d] = M
    vm = [Fraction(k, M) for k in range(M)]
    out: set[tuple[Fraction, ...]] = set()
    raw = 0
    for j in range(d):
        for a in vm:
            for y in prev:
                out.add(y[:j] + (a,) + y[j:])
                raw += 1
    log["pre_dedup"][d] = raw
    keys = sorted(out)
    if len(keys) > d * M * len(prev) or raw != d * M * len(prev):
        raise AssertionError("recursion size law violated")
    log["sizes"][d] = len(keys)
    return keys


def build_w(params: HypercrossSetParams) -> HypercrossSet:
    """The set W(N, d); meta records M per level, sizes and the growth ratio."""
    log: dict = {"M_sequence": {}, "sizes": {}, "pre_dedup": {}}
    keys = _build_keys(params, params.d, log)
    pts = np.array([[TWO_PI * float(c) for c in k] for k in keys]).reshape(-1, params.d)
    a, b = alpha_beta(params.d)
    scale = params.N**a * math.log(params.N) ** b
    meta = {
        "N": params.N, "d": params.d, "eps": params.eps,
        "C0": params.C0 if not isinstance(params.C0, dict) else {str(k): v for k, v in params.C0.items()},
        "base_grid_factor": params.base_grid_factor,
        "M_sequence": {str(k): v for k, v in log["M_sequence"].items()},
        "sizes": {str(k): v for k, v in log["sizes"].items()},
        "pre_dedup": {str(k): v for k, v in log["pre_dedup"].items()},
        "alpha_d": a, "beta_d": b,
        "size": len(keys),
        "growth_ratio": len(keys) / scale,
    }
    return HypercrossSet(PointSet(params.d, pts, "torus"), keys, meta)


def hyperbolic_system(N: int, d: int) -> FunctionSystem:
    """Real orthonormal basis of T(Gamma(N))."""
    return trig_system(build_hyperbolic(N, d), real=True)


def verify_w(system: FunctionSystem, W: PointSet, refgrid_oversample: int = 2, trials: int = 200,
             seed: int = 0, mode: str = "auto", lp_samples: int = 16,
             threads: int | None = None) -> dict:
    """Empirical constant C with ||f||_inf <= C max_{w in W} |f(w)|.

    ``exact`` runs the LP at every reference-grid point.  ``probe`` runs the
    LP at ``lp_samples`` seeded reference points and also evaluates
    ``trials`` seeded random polynomials; the reported value is the larger
    of the two, a lower bound on the exact-mode value.  ``auto`` picks exact
    when the reference grid has at most EXACT_LP_MAX_REF points.
    """
    ref = reference_grid(system, refgrid_oversample)
    if mode == "auto":
        mode = "exact" if len(ref) <= EXACT_LP_MAX_REF else "probe"
    if mode == "exact":
        ratio, cert = certify_linfty(system, W, refgrid_oversample, threads)
        return {"C_hat": ratio, "method": "lp_exact_gridref", "mode": "exact",
                "refgrid_oversample": refgrid_oversample, "m": len(W),
                "unbounded": cert.extra["unbounded"]}
    if mode != "probe":
        raise InvalidArgument("mode must be auto, exact or probe")
    rng = np.random.default_rng(child_seed(seed, 0))
    Vw = system(W.points)
    take = rng.choice(len(ref), size=min(lp_samples, len(ref)), replace=False)
    lp = linfty_lp_ratio(Vw, system(ref.points[np.sort(take)]), threads)
    Vr = system(ref.points)
    C = rng.standard_normal((trials, system.n_funcs))
    if system.is_complex:
        C = C + 1j * rng.standard_normal((trials, system.n_funcs))
    num = np.max(np.abs(Vr @ C.T), axis=0)
    den = np.max(np.abs(Vw @ C.T), axis=0)
    with np.errstate(divide="ignore"):
        r = np.where(den > 0, num / den, np.inf)
    best = max(float(lp.ratio), float(np.max(r)))
    return {"C_hat": best, "method": "empirical_probe", "mode": "probe", "seed": seed,
            "lp_sample_max": float(lp.ratio), "random_max": float(np.max(r)),
            "trials": trials, "lp_samples": int(len(take)),
            "refgrid_oversample": refgrid_oversample, "m": len(W), "unbounded": lp.unbounded}
