"""Measured discretization constants for q in {1, 2, inf}, plus Remez and
Bernstein probes.

q = 2 constants are exact up to eigenvalue accuracy.  q = inf constants are
fixed-set LP ratios over a finite reference grid, hence lower bounds on the
true sup-ratio.  q = 1 constants are one-sided empirical bounds from explicit
probe functions.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .config import DEFAULT_TOL, Tolerances, child_seed, resolve_threads
from .errors import InvalidArgument, NumericalFailure, PreconditionViolation
from .exact import WeightedRule, gram_of_rule
from .numkernel import sym_eig_extreme
from .spaces import TWO_PI, FunctionSystem, PointSet, build_hyperbolic, torus_grid

METHODS = ("eigen_exact", "lp_exact_gridref", "empirical_probe")
POLYGON_SIDES = 16


@dataclass
class DiscretizationCertificate:
    q: float
    m: int
    N: int
    C1: float
    C2: float
    method: str
    empirical: bool = False
    seed: int | None = None
    tolerances: dict = field(default_factory=lambda: DEFAULT_TOL.as_dict())
    exact: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown certificate method {self.method!r}")
        if self.method == "eigen_exact" and self.q != 2:
            raise InvalidArgument("eigenvalue certificates exist for q = 2 only")
        if self.C1 > self.C2 + 1e-12:
            raise InvalidArgument("certificate with C1 > C2")

    @property
    def epsilon(self) -> float:
        """Smallest eps with (1 - eps) <= C1 and C2 <= (1 + eps)."""
        return max(1.0 - self.C1, self.C2 - 1.0, 0.0)

    def to_json(self) -> dict:
        d = asdict(self)
        d["q"] = "inf" if math.isinf(self.q) else self.q
        return d


def _rule_of(points_or_rule) -> WeightedRule:
    if isinstance(points_or_rule, WeightedRule):
        return points_or_rule
    if isinstance(points_or_rule, PointSet):
        return WeightedRule.equal_weight(points_or_rule)
    raise InvalidArgument("expected a WeightedRule or a PointSet")


def _orthonormal(system: FunctionSystem) -> FunctionSystem:
    return system if system.orthonormal else system.orthonormalized()


# ---------------------------------------------------------------------------
# q = 2


def certify_l2(system: FunctionSystem, rule, tol: Tolerances = DEFAULT_TOL) -> DiscretizationCertificate:
    """C1, C2 = extreme eigenvalues of sum_nu lam_nu G(x^nu) in an orthonormal basis.

    Examples
    --------
    >>> from normgrid.spaces import build_box, trig_system, canonical_grid
    >>> c = certify_l2(trig_system(build_box((2,))), canonical_grid((2,)))
    >>> round(c.C1, 12), round(c.C2, 12)
    (1.0, 1.0)
    """
    rule = _rule_of(rule)
    ons = _orthonormal(system)
    G = gram_of_rule(ons, rule)
    lo, hi = sym_eig_extreme(G, tol)
    if abs(lo) <= tol.eigen:
        lo = 0.0
    N = ons.n_funcs
    exact = abs(lo - 1) <= tol.exactness and abs(hi - 1) <= tol.exactness
    trace_mean = float(np.real(np.trace(G))) / N
    return DiscretizationCertificate(2, len(rule), N, lo, hi, "eigen_exact", False, None,
                                     tol.as_dict(), exact, {"trace_mean": trace_mean})


# ---------------------------------------------------------------------------
# q = inf


@dataclass
class LinftyRatio:
    ratio: float
    lower: float
    unbounded: bool
    argmax: int | None
    witness: np.ndarray | None


def _lp_dual_value(P: np.ndarray, obj: np.ndarray) -> tuple[float, np.ndarray]:
    """sup { obj.z : P z <= 1 } through its dual min { sum y : P^T y = obj, y >= 0 }.

    The dual has a fixed matrix and is about twice as fast here; the
    maximizing z is read off the equality marginals.
    """
    res = optimize.linprog(np.ones(P.shape[0]), A_eq=P.T, b_eq=obj, bounds=(0, None),
                           method="highs")
    if res.status == 2:
        return math.inf, None
    if res.status != 0:
        raise NumericalFailure(f"LP solver failed: {res.message}")
    return float(res.fun), -np.asarray(res.eqlin.marginals)


def _polygon_constraints(Vp: np.ndarray, sides: int) -> np.ndarray:
    """Real constraint rows Re(e^{-i theta} v.c) <= 1 over c = (Re c, Im c)."""
    rows = []
    for ell in range(sides):
        w = np.exp(-2j * math.pi * ell / sides) * Vp
        rows.append(np.hstack([w.real, -w.imag]))
    return np.vstack(rows)


def linfty_lp_ratio(Vp: np.ndarray, Vref: np.ndarray, threads: int | None = None,
                    sides: int = POLYGON_SIDES) -> LinftyRatio:
    """max over reference rows a of sup { |a.c| : |Vp c| <= 1 }.

    ``Vp`` and ``Vref`` hold basis values at the points and at the reference
    grid.  Complex systems use a ``sides``-gon relaxation of each modulus
    constraint, giving ``lower <= true value <= ratio`` with
    ``lower = ratio * cos(pi / sides)``.  An unbounded value (some function
    vanishes on the points but not on the reference grid) is detected from
    the null space of ``Vp``.
    """
    Vp = np.asarray(Vp)
    Vref = np.asarray(Vref)
    n = Vref.shape[1]
    # unboundedness: a reference row with a component in null(Vp)
    if Vp.shape[0] == 0:
        null = np.eye(n)
    else:
        _, s, vt = np.linalg.svd(Vp, full_matrices=True)
        rank = int(np.sum(s > s[0] * max(Vp.shape) * np.finfo(float).eps * 10)) if s.size and s[0] > 0 else 0
        null = vt[rank:]
    if null.shape[0]:
        proj = np.abs(Vref @ np.conj(null).T)
        scale = max(1.0, float(np.max(np.abs(Vref))))
        hit = np.flatnonzero(np.max(proj, axis=1) > 1e-9 * scale)
        if hit.size:
            j = int(hit[0])
            k = int(np.argmax(proj[j]))
            return LinftyRatio(math.inf, math.inf, True, j, np.conj(null[k]))

    is_complex = np.iscomplexobj(Vp) or np.iscomplexobj(Vref)
    if is_complex:
        P = _polygon_constraints(Vp.astype(complex), sides)

        def solve(a):
            return _lp_dual_value(P, np.concatenate([a.real, -a.imag]))
    else:
        P = np.vstack([Vp, -Vp])

        def solve(a):
            return _lp_dual_value(P, a)

    rows = _distinct_rows(Vref)
    workers = resolve_threads(threads)
    if workers > 1 and len(rows) > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda j: solve(Vref[j]), rows))
    else:
        results = [solve(Vref[j]) for j in rows]
    vals = np.array([r[0] for r in results])
    best = int(np.argmax(vals))
    ratio = float(vals[best])
    lower = ratio * math.cos(math.pi / sides) if is_complex else ratio
    x = results[best][1]
    if is_complex and x is not None:
        x = x[:n] + 1j * x[n:]
    return LinftyRatio(ratio, lower, False, int(rows[best]), x)


def _distinct_rows(V: np.ndarray) -> list[int]:
    # reference points whose basis rows coincide give the same LP
    _, idx = np.unique(np.round(np.column_stack([V.real, V.imag]) if np.iscomplexobj(V) else V, 12),
                       axis=0, return_index=True)
    return sorted(int(i) for i in idx)


def _torus_keys(x: np.ndarray) -> np.ndarray:
    k = np.round(np.mod(x, TWO_PI) / TWO_PI * 1e9).astype(np.int64)
    return np.mod(k, 1_000_000_000)


def _freq_symmetries(system: FunctionSystem) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Signed coordinate permutations leaving the span of a trig system invariant."""
    data = system.meta.get("freqs")
    if system.domain != "torus" or data is None or system.dim > 3:
        return []
    K = np.array(data["freqs"], dtype=np.int64).reshape(-1, system.dim)
    if system.meta.get("basis") == "real":
        K = np.vstack([K, -K])
    base = {tuple(k) for k in K}
    out = []
    for perm in itertools.permutations(range(system.dim)):
        for signs in itertools.product((1, -1), repeat=system.dim):
            g = K[:, perm] * np.array(signs)
            if {tuple(k) for k in g} == base:
                out.append((perm, signs))
    return out


def orbit_representatives(system: FunctionSystem, points: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Indices of reference points, one per orbit of the common symmetries.

    A signed coordinate permutation g that maps both the span and the point
    set onto themselves satisfies LP(g x) = LP(x), so only one reference
    point per orbit needs a linear program.  Returns all indices when no
    symmetry applies.
    """
    syms = _freq_symmetries(system)
    if len(syms) <= 1 or ref.shape[0] == 0:
        return np.arange(ref.shape[0])
    pkeys = {tuple(k) for k in _torus_keys(points)}
    rkeys = _torus_keys(ref)
    rset = {tuple(k): i for i, k in enumerate(rkeys)}
    valid = []
    for perm, signs in syms:
        mapped = _torus_keys(points[:, perm] * np.array(signs))
        if {tuple(k) for k in mapped} != pkeys:
            continue
        rmapped = _torus_keys(ref[:, perm] * np.array(signs))
        if any(tuple(k) not in rset for k in rmapped):
            continue
        valid.append(np.array([rset[tuple(k)] for k in rmapped]))
    if len(valid) <= 1:
        return np.arange(ref.shape[0])
    images = np.vstack(valid)
    return np.unique(np.min(images, axis=0))


def reference_grid(system: FunctionSystem, oversample: int) -> PointSet:
    if system.domain == "tabulated":
        return PointSet(system.dim, system.tab_points, system.meta.get("frame", "torus"))
    if system.degree is None:
        raise PreconditionViolation("reference grid needs a system degree")
    if oversample < 1:
        raise InvalidArgument("oversample must be a positive integer")
    return torus_grid([oversample * (2 * k + 1) for k in system.degree])


def certify_linfty(system: FunctionSystem, points: PointSet, refgrid_oversample: int = 2,
                   threads: int | None = None, tol: Tolerances = DEFAULT_TOL
                   ) -> tuple[float, DiscretizationCertificate]:
    """Fixed-set ratio sup_f ||f||_{inf, grid} / max_j |f(x^j)| by linear programming.

    The reference grid is the uniform grid with ``refgrid_oversample``
    times the Nyquist count per axis, augmented by the points themselves
    (where the LP value is 1).  Reference points related by a symmetry of
    both the span and the point set share one LP.  An infinite ratio means
    some nonzero f in the span vanishes on the points.
    """
    ref = reference_grid(system, refgrid_oversample)
    pts = points.points
    reps = orbit_representatives(system, pts, ref.points)
    res = linfty_lp_ratio(system(pts) if len(points) else np.zeros((0, system.n_funcs)),
                          system(ref.points[reps]), threads)
    ratio = res.ratio if not len(points) else max(res.ratio, 1.0)
    c1 = 0.0 if math.isinf(ratio) else 1.0 / ratio
    extra = {"refgrid_oversample": refgrid_oversample, "unbounded": res.unbounded,
             "lp_count": int(len(reps)), "refgrid_size": len(ref),
             "ratio_lower": res.lower, "relaxation": "polygon" if system.is_complex else "none"}
    if system.is_complex:
        extra["polygon_sides"] = POLYGON_SIDES
    cert = DiscretizationCertificate(math.inf, len(points), system.n_funcs, c1, 1.0,
                                     "lp_exact_gridref", False, None, tol.as_dict(),
                                     bool(abs(ratio - 1) <= tol.exactness), extra)
    return ratio, cert


def nikolskii_constant(system: FunctionSystem, points=None) -> float:
    """sqrt(max_x sum_i |u_i(x)|^2) for an orthonormal system: ||f||_inf <= H ||f||_2."""
    ons = _orthonormal(system)
    return math.sqrt(ons.christoffel_max(points))


def linfty_from_l2(cert_l2: DiscretizationCertificate, nikolskii_H: float,
                   weight_sum: float = 1.0) -> float:
    """Constant K with ||f||_inf <= K max_j |f(x^j)| from an L2 certificate.

    ||f||_inf <= H ||f||_2 <= H C1^(-1/2) (sum lam |f(x)|^2)^(1/2), and the
    last factor is at most (sum |lam|)^(1/2) max_j |f(x^j)|.

    Examples
    --------
    >>> c = DiscretizationCertificate(2, 5, 5, 1.0, 1.0, "eigen_exact")
    >>> round(linfty_from_l2(c, math.sqrt(5)), 12) == round(math.sqrt(5), 12)
    True
    """
    if cert_l2.q != 2:
        raise InvalidArgument("an L2 certificate is required")
    if cert_l2.C1 <= 0:
        raise InvalidArgument("C1 must be positive")
    return float(nikolskii_H / math.sqrt(cert_l2.C1) * math.sqrt(weight_sum))


# ---------------------------------------------------------------------------
# q = 1


L1_GRID_CAP = 2**18


def l1_oversample(system: FunctionSystem, cap: int = L1_GRID_CAP) -> int:
    """Largest factor in [4, 32] whose reference grid stays within ``cap`` points."""
    base = math.prod(2 * k + 1 for k in system.degree)
    o = 32
    while o > 4 and o ** system.dim * base > cap:
        o -= 1
    return o


def _l1_grid(system: FunctionSystem, oversample: int | None) -> np.ndarray:
    if system.domain == "tabulated":
        return system.tab_points
    if oversample is None:
        oversample = l1_oversample(system)
    return reference_grid(system, oversample).points


def _l1_ratios(C: np.ndarray, Vn: np.ndarray, w: np.ndarray, Vg: np.ndarray) -> np.ndarray:
    disc = w @ np.abs(Vn @ C.T)
    cont = np.mean(np.abs(Vg @ C.T), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(cont > 0, disc / cont, np.nan)


def l1_probe_bounds(system: FunctionSystem, nodes: np.ndarray, weights: np.ndarray,
                    probe_budget: int, seed: int, oversample: int | None = None,
                    refine_rounds: int = 30) -> tuple[float, float, dict]:
    """Min and max of sum lam |f(x)| / ||f||_1 over explicit probe functions.

    Probes: every basis function, the constant (when in the span), functions
    vanishing on all nodes (when the nodes do not determine f), seeded random
    coefficient vectors, and a seeded perturbation search started from the
    extreme probes.  The min is an upper bound on the true infimum and the
    max a lower bound on the true supremum.
    """
    rng = np.random.default_rng(child_seed(seed, 1))
    Vn = system(nodes)
    Vg = system(_l1_grid(system, oversample))
    N = system.n_funcs
    dtype = complex if system.is_complex else float
    probes = [np.eye(N, dtype=dtype)]
    # constant function, if it lies in the span
    one = np.ones(Vg.shape[0])
    c_one, *_ = np.linalg.lstsq(Vg, one, rcond=None)
    if np.max(np.abs(Vg @ c_one - one)) < 1e-9:
        probes.append(c_one[None, :])
    if Vn.shape[0]:
        _, s, vt = np.linalg.svd(Vn, full_matrices=True)
        rank = int(np.sum(s > 1e-10 * max(1.0, s[0]))) if s.size else 0
        if rank < N:
            null = np.conj(vt[rank:])
            probes.append(null)
            probes.append(rng.standard_normal((4, null.shape[0])) @ null)
    else:
        probes.append(rng.standard_normal((4, N)))
    R = rng.standard_normal((probe_budget, N))
    if system.is_complex:
        R = R + 1j * rng.standard_normal((probe_budget, N))
    probes.append(R)
    C = np.vstack(probes)
    r = _l1_ratios(C, Vn, weights, Vg)
    ok = ~np.isnan(r)
    C, r = C[ok], r[ok]
    lo_i, hi_i = int(np.argmin(r)), int(np.argmax(r))
    lo, hi = float(r[lo_i]), float(r[hi_i])
    # perturbation search around the current extremes
    for target, start in (("min", C[lo_i]), ("max", C[hi_i])):
        c = start.copy()
        best = lo if target == "min" else hi
        step = 0.5 * max(np.linalg.norm(c), 1e-12) / math.sqrt(N)
        for _ in range(refine_rounds):
            trial = c[None, :] + step * rng.standard_normal((8, N))
            tr = _l1_ratios(trial, Vn, weights, Vg)
            tr = np.where(np.isnan(tr), best, tr)
            j = int(np.argmin(tr) if target == "min" else np.argmax(tr))
            better = tr[j] < best if target == "min" else tr[j] > best
            if better:
                best, c = float(tr[j]), trial[j]
            else:
                step *= 0.7
        if target == "min":
            lo = min(lo, best)
        else:
            hi = max(hi, best)
    return lo, hi, {"probes": int(C.shape[0]),
                    "oversample": oversample if oversample is not None else l1_oversample(system)}


def certify_l1(system: FunctionSystem, rule, probe_budget: int = 200, seed: int = 0,
               oversample: int | None = None, tol: Tolerances = DEFAULT_TOL) -> DiscretizationCertificate:
    """Empirical one-sided L1 constants; ||f||_1 is a grid mean at ``oversample``
    (by default the finest factor allowed by :func:`l1_oversample`)."""
    rule = _rule_of(rule)
    lo, hi, info = l1_probe_bounds(system, rule.points, rule.weights, probe_budget, seed, oversample)
    info["semantics"] = "empirical-bounds-only"
    return DiscretizationCertificate(1, len(rule), system.n_funcs, lo, hi, "empirical_probe", True,
                                     seed, tol.as_dict(), False, info)


# ---------------------------------------------------------------------------
# Remez and Bernstein probes


def remez_threshold(N: int, d: int, c2: float = 1.0) -> float:
    """c2 / (N^alpha_d (ln N)^beta_d)."""
    from .hypercross import alpha_beta

    a, b = alpha_beta(d)
    return c2 / (N**a * math.log(N) ** b)


def remez_nested_ratios(values: np.ndarray, order: np.ndarray, counts: Sequence[int]) -> list[float]:
    """sup|f| / sup_{grid minus B_k}|f| for nested sets B_k = order[:counts[k]]."""
    a = np.abs(values)
    top = float(a.max())
    out = []
    for k in counts:
        rest = np.ones(a.shape[0], dtype=bool)
        rest[order[:k]] = False
        if not rest.any():
            raise InvalidArgument("exceptional set covers the whole grid")
        s = float(a[rest].max())
        out.append(math.inf if s == 0 else top / s)
    return out


def remez_check(system: FunctionSystem, measure_of_B: float, trials: int = 50, seed: int = 0,
                oversample: int = 4, adversarial: bool = True, N: int | None = None,
                c2: float = 1.0) -> dict:
    """Ratios ||f||_{inf,grid} / sup_{grid minus B} |f| for random f and sets B.

    B is a union of reference-grid cells of total normalized measure at most
    ``measure_of_B``.  Each trial uses one random f and a random B; with
    ``adversarial`` a second B made of the cells where |f| is largest is
    also tried.
    """
    if not (0.0 <= measure_of_B < 1.0):
        raise InvalidArgument("measure_of_B must lie in [0, 1)")
    grid = reference_grid(system, oversample).points
    G = grid.shape[0]
    k = int(math.floor(measure_of_B * G + 1e-12))
    if k >= G:
        raise InvalidArgument("exceptional set covers the whole grid")
    V = system(grid)
    ratios = []
    for t in range(trials):
        rng = np.random.default_rng(child_seed(seed, t))
        c = rng.standard_normal(system.n_funcs)
        if system.is_complex:
            c = c + 1j * rng.standard_normal(system.n_funcs)
        vals = V @ c
        order = rng.permutation(G)
        r = remez_nested_ratios(vals, order, [k])[0]
        if adversarial:
            r = max(r, remez_nested_ratios(vals, np.argsort(-np.abs(vals), kind="stable"), [k])[0])
        ratios.append(r)
    report = {
        "measure_of_B": measure_of_B,
        "cells_removed": k,
        "grid_size": G,
        "trials": trials,
        "seed": seed,
        "oversample": oversample,
        "adversarial": adversarial,
        "max_ratio": float(max(ratios)) if ratios else 1.0,
        "ratios": [float(r) for r in ratios],
    }
    if N is not None and N >= 2 and system.dim >= 1:
        thr = remez_threshold(N, system.dim, c2)
        report["threshold"] = thr
        report["below_threshold"] = bool(measure_of_B <= thr)
        report["c2"] = c2
    return report


def bernstein_probe(N: int, d: int, trials: int = 100, seed: int = 0, oversample: int = 4,
                    chunk: int = 200000) -> dict:
    """Empirical constant for ||f^(1,...,1)|| <= c N (ln N)^(d-1) ||f|| on T(Gamma(N)).

    Both norms are grid maxima.  Single modes e^{ikx} with prod |k_j| = N
    (the largest possible derivative factor) are always probed.
    """
    if N < 2:
        raise InvalidArgument("N must be at least 2")
    if d < 1:
        raise InvalidArgument("d must be positive")
    Q = build_hyperbolic(N, d)
    K = Q.array.astype(float)
    factor = np.prod(1j * K, axis=1)
    grid = torus_grid([oversample * (2 * N + 1)] * d).points
    norm = N * math.log(N) ** (d - 1)

    def gridmax(C: np.ndarray) -> np.ndarray:
        out = np.zeros(C.shape[0])
        for s in range(0, grid.shape[0], max(1, chunk // max(len(Q), 1))):
            E = np.exp(1j * (grid[s:s + chunk // max(len(Q), 1)] @ K.T))
            out = np.maximum(out, np.max(np.abs(E @ C.T), axis=0))
        return out

    modes = np.flatnonzero(np.abs(np.prod(K, axis=1)) == np.max(np.abs(np.prod(K, axis=1))))
    C = np.zeros((len(modes), len(Q)), dtype=complex)
    C[np.arange(len(modes)), modes] = 1.0
    rng = np.random.default_rng(child_seed(seed, 0))
    R = rng.standard_normal((trials, len(Q))) + 1j * rng.standard_normal((trials, len(Q)))
    C = np.vstack([C, R])
    num = gridmax(C * factor[None, :])
    den = gridmax(C)
    ratios = num / (norm * den)
    best = int(np.argmax(ratios))
    return {
        "N": N, "d": d, "trials": trials, "seed": seed, "oversample": oversample,
        "c_hat": float(ratios[best]),
        "single_mode": float(np.max(ratios[:len(modes)])),
        "random_max": float(np.max(ratios[len(modes):])) if trials else None,
        "argmax_is_single_mode": bool(best < len(modes)),
    }


def brute_force_l2_ratio(system: FunctionSystem, rule, samples: int, seed: int) -> tuple[float, float]:
    """Min and max of (sum lam |f|^2) / ||f||_2^2 over random coefficient vectors."""
    rule = _rule_of(rule)
    ons = _orthonormal(system)
    G = gram_of_rule(ons, rule)
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((samples, ons.n_funcs))
    if ons.is_complex:
        C = C + 1j * rng.standard_normal((samples, ons.n_funcs))
    num = np.real(np.einsum("si,ij,sj->s", np.conj(C), G, C))
    den = np.sum(np.abs(C) ** 2, axis=1)
    r = num / den
    return float(r.min()), float(r.max())

