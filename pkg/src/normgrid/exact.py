"""Exact recovery and cubature, exact even-q discretization, positive rules.

Every routine works with a :class:`~normgrid.spaces.FunctionSystem` and a
finite candidate set; "exact" always means a floating point residual below
the configured tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .errors import (Infeasible, InvalidArgument, NumericalFailure,
                     PreconditionViolation, SpanDeficiency)
from .numkernel import min_weighted_norm_solution, nnls, sym_eig_extreme
from .spaces import FunctionSystem, OrthoSystem, PointSet, torus_grid

MAX_LIFT = 5000
DEFAULT_CANDIDATE_FACTOR = 16
MAX_CANDIDATES = 20000


# ---------------------------------------------------------------------------
# rules


@dataclass(frozen=True, eq=False)
class WeightedRule:
    """Nodes with real weights, optionally tagged ``positive``, ``probability``
    or ``exact_q:<q>``."""

    nodes: PointSet
    weights: np.ndarray
    tags: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)
    tol: float = 1e-10

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape[0] != len(self.nodes):
            raise InvalidArgument("one weight per node is required")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        tags = tuple(sorted(set(self.tags)))
        object.__setattr__(self, "tags", tags)
        if ("positive" in tags or "probability" in tags) and w.size and w.min() < -self.tol:
            raise InvalidArgument("rule tagged positive has a negative weight")
        if "probability" in tags and abs(math.fsum(w) - 1.0) > self.tol:
            raise InvalidArgument("probability rule weights do not sum to 1")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def points(self) -> np.ndarray:
        return self.nodes.points

    @classmethod
    def equal_weight(cls, nodes: PointSet, tags: Sequence[str] = ()) -> "WeightedRule":
        m = len(nodes)
        if m == 0:
            raise InvalidArgument("equal-weight rule needs at least one node")
        return cls(nodes, np.full(m, 1.0 / m), tuple(tags) + ("positive", "probability"))

    def integrate(self, f) -> complex | float:
        vals = f(self.nodes.points)
        return vals.T @ self.weights if np.ndim(vals) > 1 else float(np.real_if_close(self.weights @ vals))

    def to_json(self) -> dict:
        return self.nodes.to_json(self.weights, self.tags, self.meta or None)

    @classmethod
    def from_json(cls, data: dict) -> "WeightedRule":
        nodes = PointSet.from_json(data)
        w = data.get("weights")
        if w is None:
            w = np.full(len(nodes), 1.0 / max(len(nodes), 1))
        return cls(nodes, np.array(w, dtype=float), tuple(data.get("tags", ())),
                   dict(data.get("meta", {})), tol=1e-8)


@dataclass(frozen=True, eq=False)
class RecoveryOperator:
    """f(x) = sum_j f(node_j) psi_j(x), with psi_j = sum_i coeffs[i, j] u_i."""

    system: FunctionSystem
    nodes: PointSet
    coeffs: np.ndarray

    def psi(self, x) -> np.ndarray:
        return self.system(x) @ self.coeffs

    def __call__(self, node_values, x) -> np.ndarray:
        return self.psi(x) @ np.asarray(node_values)

    def reproduction_error(self, probes, coef_samples: np.ndarray | None = None) -> float:
        """Max error reproducing basis functions (or given combinations) on probes."""
        Vp = self.system(probes)
        Vn = self.system(self.nodes.points)
        C = np.eye(self.system.n_funcs) if coef_samples is None else np.asarray(coef_samples).T
        exact = Vp @ C
        rec = self.psi(probes) @ (Vn @ C)
        return float(np.max(np.abs(rec - exact))) if exact.size else 0.0


# ---------------------------------------------------------------------------
# node selection and recovery


def default_candidates(system: FunctionSystem, factor: int = DEFAULT_CANDIDATE_FACTOR,
                       cap: int = MAX_CANDIDATES) -> PointSet:
    """Dense uniform grid, ``factor`` times the Nyquist size per axis, capped in total size."""
    if system.domain == "tabulated":
        return PointSet(system.dim, system.tab_points, system.meta.get("frame", "torus"))
    if system.degree is None:
        raise PreconditionViolation("candidate grid needs a system degree")
    nyq = [2 * k + 1 for k in system.degree]
    f = factor
    while f > 1 and math.prod(f * n for n in nyq) > cap:
        f -= 1
    return torus_grid([f * n for n in nyq])


@dataclass
class Selection:
    indices: np.ndarray          # candidate indices, in selection order
    functions: np.ndarray        # kept function indices, aligned with ``indices``
    pivots: np.ndarray
    determinant: float | complex


def _greedy_lu(V: np.ndarray, tol: float, drop_dependent: bool) -> Selection:
    """Row-pivoted elimination on the candidate-by-function matrix ``V``.

    Choosing the row with the largest remaining entry in column k maximizes
    |det U| over the next node given the previous ones, since the new
    determinant is the old one times that Schur-complement entry.
    """
    R = np.array(V, dtype=complex if np.iscomplexobj(V) else float, copy=True)
    m, n = R.shape
    scale = np.max(np.abs(V), axis=0) if m else np.zeros(n)
    free = np.ones(m, dtype=bool)
    rows: list[int] = []
    cols: list[int] = []
    pivots: list = []
    for k in range(n):
        col = np.where(free, np.abs(R[:, k]), -1.0)
        i = int(np.argmax(col)) if m else 0
        if m == 0 or col[i] <= tol * max(1.0, float(scale[k])):
            if drop_dependent:
                continue
            raise SpanDeficiency(f"no candidate keeps the determinant nonzero at step {len(rows) + 1}",
                                 step=len(rows) + 1)
        p = R[i, k]
        rows.append(i)
        cols.append(k)
        pivots.append(p)
        free[i] = False
        if k + 1 < n:
            R[:, k + 1:] -= np.outer(R[:, k] / p, R[i, k + 1:])
        R[:, k] = 0.0
    piv = np.array(pivots)
    det = np.prod(piv) if piv.size else 1.0
    return Selection(np.array(rows, dtype=int), np.array(cols, dtype=int), piv,
                     complex(det) if np.iscomplexobj(piv) else float(det))


def select_nodes_by_determinant(system: FunctionSystem, candidates: PointSet,
                                tol: Tolerances = DEFAULT_TOL) -> PointSet:
    """Greedily pick N candidates maximizing |det U(x^1, ..., x^k)| step by step.

    Ties go to the first candidate in the given order.

    Raises
    ------
    SpanDeficiency
        If at some step every remaining candidate makes the determinant vanish.
    """
    V = system(candidates.points)
    sel = _greedy_lu(V, tol.determinant, drop_dependent=False)
    return PointSet(candidates.dim, candidates.points[sel.indices], candidates.frame)


def build_recovery(system: FunctionSystem, nodes: PointSet,
                   tol: Tolerances = DEFAULT_TOL) -> RecoveryOperator:
    """Lagrange-type recovery from N node values."""
    V = system(nodes.points)
    if V.shape[0] != V.shape[1]:
        raise InvalidArgument("recovery needs exactly N nodes")
    s = np.linalg.svd(V, compute_uv=False)
    if s.size and s[-1] <= tol.determinant * max(1.0, s[0]):
        raise SpanDeficiency("node matrix is singular", step=int(np.sum(s > tol.determinant * s[0])) + 1)
    coeffs = np.linalg.inv(V)
    return RecoveryOperator(system, nodes, coeffs)


def moment_residual(system: FunctionSystem, rule: WeightedRule, moments=None) -> float:
    if moments is None:
        moments = system.moments()
    if len(rule) == 0:
        return float(np.max(np.abs(moments), initial=0.0))
    got = rule.weights @ system(rule.points)
    return float(np.max(np.abs(got - moments), initial=0.0))


def exact_cubature(system: FunctionSystem, candidates: PointSet | None = None,
                   moments=None, tol: Tolerances = DEFAULT_TOL) -> WeightedRule:
    """At most N nodes with weights reproducing every moment of the span."""
    if candidates is None:
        candidates = default_candidates(system)
    if moments is None:
        moments = system.moments()
    moments = np.asarray(moments)
    nodes = select_nodes_by_determinant(system, candidates, tol)
    V = system(nodes.points)
    lam = np.linalg.solve(V.T, moments)
    if np.iscomplexobj(lam):
        if np.max(np.abs(lam.imag), initial=0.0) > tol.exactness * max(1.0, np.max(np.abs(lam))):
            raise NumericalFailure("cubature weights are not real")
        lam = lam.real
    rule = WeightedRule(nodes, lam, ("exact",))
    res = moment_residual(system, rule, moments)
    if res > tol.exactness * max(1.0, float(np.max(np.abs(moments), initial=0.0))):
        raise NumericalFailure("cubature moment residual above tolerance", residual=res)
    return rule


# ---------------------------------------------------------------------------
# products of basis functions


def lift_size(N: int, q: int) -> int:
    """M(N, q) = binom(N + q - 1, q)."""
    return math.comb(N + q - 1, q)


def _lift(system: FunctionSystem, q: int) -> FunctionSystem:
    if q < 1:
        raise InvalidArgument("q must be a positive integer")
    if system.is_complex:
        raise InvalidArgument("products are taken of real-valued systems only")
    N = system.n_funcs
    M = lift_size(N, q)
    if M > MAX_LIFT:
        raise InvalidArgument(f"product space too large: M(N,q) = {M} > {MAX_LIFT}")
    exps = np.zeros((M, N), dtype=int)
    for r, combo in enumerate(combinations_with_replacement(range(N), q)):
        for i in combo:
            exps[r, i] += 1
    base = system

    def ev(x):
        V = base.evaluator(x)
        out = np.ones((x.shape[0], M))
        for i in range(N):
            e = exps[:, i]
            if np.any(e):
                out *= V[:, [i]] ** e[None, :]
        return out

    degree = None if system.degree is None else tuple(q * k for k in system.degree)
    labels = tuple("*".join(f"u{i}^{e}" for i, e in enumerate(row) if e) for row in exps)
    meta = dict(system.meta)
    meta["lift"] = {"q": q, "exponents": exps.tolist()}
    return FunctionSystem(M, system.dim, ev, system.domain, degree, None, False, labels,
                          system.tab_points, meta)


def lift_even_q(system: FunctionSystem, q: int) -> FunctionSystem:
    """Span of all degree-q monomials u_1^k_1 ... u_N^k_N, for even q.

    Examples
    --------
    >>> from normgrid.spaces import trig_span
    >>> lift_even_q(trig_span(1, "sincos"), 2).n_funcs
    3
    """
    if q < 2 or q % 2:
        raise InvalidArgument("q must be an even positive integer")
    return _lift(system, q)


def _lift_exponents(lifted: FunctionSystem) -> np.ndarray:
    return np.asarray(lifted.meta["lift"]["exponents"])


def _lq_candidates(system: FunctionSystem, q: int, candidates: PointSet | None) -> PointSet:
    if candidates is not None:
        return candidates
    if system.domain == "tabulated":
        return default_candidates(system)
    deg = tuple(q * k for k in system.degree)
    nyq = [2 * k + 1 for k in deg]
    f = DEFAULT_CANDIDATE_FACTOR
    while f > 1 and math.prod(f * n for n in nyq) > MAX_CANDIDATES:
        f -= 1
    return torus_grid([f * n for n in nyq])


def exact_weighted_discretization(system: FunctionSystem, q: int,
                                  candidates: PointSet | None = None,
                                  tol: Tolerances = DEFAULT_TOL) -> WeightedRule:
    """Rule with at most M(N, q) nodes and sum lam f(x)^q = int f^q on the span.

    Linearly dependent products (for instance cos^2 + sin^2 = 1) are skipped
    while selecting nodes, so the node count is the rank of the product space.
    """
    lifted = lift_even_q(system, q)
    cand = _lq_candidates(system, q, candidates)
    V = lifted(cand.points)
    sel = _greedy_lu(V, tol.determinant, drop_dependent=True)
    if sel.indices.size == 0:
        raise SpanDeficiency("product space vanishes on all candidates", step=1)
    nodes = PointSet(cand.dim, cand.points[sel.indices], cand.frame)
    mom = lifted.moments()
    Vn = V[sel.indices][:, sel.functions]
    lam = np.linalg.solve(Vn.T, mom[sel.functions])
    rule = WeightedRule(nodes, lam, (f"exact_q:{q}",))
    res = moment_residual(lifted, rule, mom)
    if res > tol.exactness * max(1.0, float(np.max(np.abs(mom)))):
        raise NumericalFailure("dependent products are not reproduced; candidate grid too coarse",
                               residual=res)
    return rule


def lq_power_integral(system: FunctionSystem, coeffs: np.ndarray, q: int,
                      oversample: int = 64) -> np.ndarray:
    """Grid oracle for int f^q with f = sum c_i u_i (rows of ``coeffs``)."""
    coeffs = np.atleast_2d(coeffs)
    if system.domain == "tabulated":
        V = system(system.tab_points)
        return np.mean((V @ coeffs.T) ** q, axis=0)
    sizes = [oversample * (2 * k + 1) for k in system.degree]
    grid = torus_grid(sizes)
    return np.mean((system(grid) @ coeffs.T) ** q, axis=0)


# ---------------------------------------------------------------------------
# positive rules


def _caratheodory(Phi: np.ndarray, lam: np.ndarray, tol: float) -> np.ndarray:
    """Prune the support of a positive combination down to rank(Phi) atoms.

    ``Phi`` has one row per atom.  While the active rows are linearly
    dependent, move along a null vector of their transpose until a weight
    hits zero; the combination sum lam_i Phi_i is unchanged.
    """
    lam = lam.copy()
    while True:
        S = np.flatnonzero(lam > 0)
        if S.size == 0:
            return lam
        A = Phi[S].T
        _, s, vt = np.linalg.svd(A, full_matrices=True)
        rank = int(np.sum(s > tol * max(1.0, s[0]))) if s.size else 0
        if rank >= S.size:
            return lam
        z = vt[-1]
        if not np.any(z > 0):
            z = -z
        pos = z > 0
        ratios = lam[S][pos] / z[pos]
        j = int(np.argmin(ratios))
        t = ratios[j]
        lam[S] = lam[S] - t * z
        lam[S[np.flatnonzero(pos)[j]]] = 0.0
        lam[lam < 0] = 0.0


def _compress(Phi: np.ndarray, b: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Nonnegative lam over rows of Phi with Phi.T lam = b and small support."""
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    lam, rnorm = nnls(Phi.T, b, tol)
    if rnorm > tol.exactness * scale:
        raise Infeasible("moment vector is outside the cone of the candidates", residual=rnorm)
    # round-off weights carry no mass
    lam[lam <= 1e-14 * max(1.0, float(lam.sum()))] = 0.0
    lam = _caratheodory(Phi, lam, 1e-11)
    S = np.flatnonzero(lam > 0)
    if S.size:
        # polish on the final support
        sub, _ = nnls(Phi[S].T, b, tol)
        cand = np.zeros_like(lam)
        cand[S] = sub
        if np.linalg.norm(Phi.T @ cand - b) <= np.linalg.norm(Phi.T @ lam - b):
            lam = cand
        try:
            exact = np.linalg.lstsq(Phi[S].T, b, rcond=None)[0]
            if exact.min() >= 0:
                trial = np.zeros_like(lam)
                trial[S] = exact
                if np.linalg.norm(Phi.T @ trial - b) <= np.linalg.norm(Phi.T @ lam - b):
                    lam = trial
        except np.linalg.LinAlgError:
            pass
    res = float(np.max(np.abs(Phi.T @ lam - b), initial=0.0))
    if res > tol.exactness * scale:
        raise Infeasible("pruned rule lost the moments", residual=res)
    return lam


def tchakaloff_compress(system: FunctionSystem, rule: WeightedRule | None = None, *,
                        moments=None, candidates: PointSet | None = None,
                        tol: Tolerances = DEFAULT_TOL) -> WeightedRule:
    """Positive rule on at most N nodes with the same moments over the span.

    Either compress a positive ``rule`` (moments and candidates are taken
    from it) or match given ``moments`` over ``candidates`` (default: the
    system's moments over a dense grid).
    """
    if system.is_complex:
        raise InvalidArgument("compression needs a real-valued system")
    if rule is not None:
        candidates = rule.nodes
        if rule.weights.size and rule.weights.min() < -tol.feasibility:
            raise InvalidArgument("input rule has negative weights")
        moments = np.maximum(rule.weights, 0.0) @ system(rule.points) if len(rule) else np.zeros(system.n_funcs)
    if candidates is None:
        candidates = default_candidates(system)
    if moments is None:
        moments = system.moments()
    moments = np.asarray(moments, dtype=float)
    Phi = system(candidates.points)
    lam = _compress(Phi, moments, tol)
    S = np.flatnonzero(lam > 0)
    if S.size > system.n_funcs:
        raise NumericalFailure(f"pruning left {S.size} > N nodes")
    nodes = PointSet(candidates.dim, candidates.points[S], candidates.frame)
    return WeightedRule(nodes, lam[S], ("positive",),
                        {"candidates": len(candidates)}, tol=tol.feasibility)


def tchakaloff_probability(system: FunctionSystem, candidates: PointSet | None = None,
                           tol: Tolerances = DEFAULT_TOL) -> WeightedRule:
    """Positive rule with weights summing to one and at most N + 1 nodes."""
    ext = system.with_constant()
    if candidates is None:
        candidates = default_candidates(system)
    rule = tchakaloff_compress(ext, moments=ext.moments(), candidates=candidates, tol=tol)
    w = rule.weights
    total = math.fsum(w)
    if abs(total - 1.0) > 1e-10:
        raise NumericalFailure("weights do not sum to one", residual=abs(total - 1.0))
    return WeightedRule(rule.nodes, w, ("positive", "probability"), rule.meta, tol=1e-10)


def positive_exact_lq(system: FunctionSystem, q: int, candidates: PointSet | None = None,
                      tol: Tolerances = DEFAULT_TOL) -> WeightedRule:
    """Nonnegative weights with sum lam f(x)^q = int f^q for every f in the span."""
    lifted = _lift(system, q)
    cand = _lq_candidates(system, q, candidates)
    rule = tchakaloff_compress(lifted, moments=lifted.moments(), candidates=cand, tol=tol)
    return WeightedRule(rule.nodes, rule.weights, ("positive", f"exact_q:{q}"), rule.meta,
                        tol=tol.feasibility)


# ---------------------------------------------------------------------------
# stable weights


CONJUGATE = {1: np.inf, 2: 2, np.inf: 1}


@dataclass
class StableWeights:
    weights: np.ndarray
    p: float
    stability_norm: float
    measured_c1: float
    method: str
    ok: bool


def _lp_ratio(system: FunctionSystem, points: np.ndarray, refgrid: np.ndarray) -> float:
    from .certify import linfty_lp_ratio

    return linfty_lp_ratio(system(points), system(refgrid)).ratio


def stable_exact_weights(system: FunctionSystem, W: PointSet, mu, p: float,
                         refgrid_oversample: int = 2, probes: int = 64, seed: int = 0,
                         tol: Tolerances = DEFAULT_TOL) -> StableWeights:
    """Exact cubature weights on W of least mu-weighted dual norm.

    The one-sided constant C1 of ||f||_p <= C1 (sum mu |f|^p)^(1/p) is
    measured alongside: by eigenvalues (p = 2), by the reference-grid LP
    (p = inf), or by probes that include the LP dual witness (p = 1).  The
    weights' norm is then checked against it.
    """
    p = float(p)
    if p not in (1.0, 2.0, np.inf):
        raise InvalidArgument("p must be 1, 2 or inf")
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.shape[0] != len(W):
        raise InvalidArgument("one mu per point of W")
    p_dual = {1.0: np.inf, 2.0: 2, np.inf: 1}[p]
    V = system(W.points)
    if np.iscomplexobj(V):
        raise InvalidArgument("stable weights need a real system")
    b = system.moments()
    sol = min_weighted_norm_solution(V.T, b, mu, p_dual, tol)

    if p == 2.0:
        from scipy.linalg import eigh

        G = system.gram()
        GW = (V.T * mu) @ V
        ev = eigh(GW, G, eigvals_only=True)
        c1 = math.inf if ev[0] <= 0 else ev[0] ** -0.5
        method = "eigen_exact"
    elif p == np.inf:
        ref = _refgrid(system, refgrid_oversample)
        c1 = _lp_ratio(system, W.points, ref)
        method = "lp_exact_gridref"
    else:
        ref = _refgrid(system, refgrid_oversample)
        Vr = system(ref)
        rng = np.random.default_rng(seed)
        C = np.vstack([sol.dual[None, :], rng.standard_normal((probes, system.n_funcs))])
        cont = np.mean(np.abs(Vr @ C.T), axis=0)
        disc = mu @ np.abs(V @ C.T)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(disc > 0, cont / disc, np.where(cont > 0, np.inf, 0.0))
        c1 = float(np.max(r))
        method = "empirical_probe"
    ok = sol.norm <= c1 + 1e-6
    if not ok:
        raise NumericalFailure(f"stability norm {sol.norm:.6g} exceeds measured C1 {c1:.6g}")
    return StableWeights(sol.weights, p, sol.norm, float(c1), method, ok)


def _refgrid(system: FunctionSystem, oversample: int) -> np.ndarray:
    if system.domain == "tabulated":
        return system.tab_points
    return torus_grid([oversample * (2 * k + 1) for k in system.degree]).points


# ---------------------------------------------------------------------------
# recovery from an exact L2 rule


def gram_of_rule(system: FunctionSystem, rule: WeightedRule) -> np.ndarray:
    """sum_nu lam_nu G(x^nu), the discrete Gram matrix."""
    V = system(rule.points)
    return (np.conj(V).T * rule.weights) @ V


def recovery_from_exact_l2(rule: WeightedRule, system: OrthoSystem,
                           tol: Tolerances = DEFAULT_TOL) -> RecoveryOperator:
    """Reproducing-kernel recovery f(x) = sum lam_j f(x^j) D(x, x^j)."""
    G = gram_of_rule(system, rule)
    dev = float(np.max(np.abs(G - np.eye(system.n_funcs)), initial=0.0))
    if dev > tol.exactness:
        raise PreconditionViolation(f"rule is not exact in L2 (Gram deviation {dev:.3e})")
    V = system(rule.points)
    coeffs = np.conj(V).T * rule.weights
    return RecoveryOperator(system, rule.nodes, coeffs)


# ---------------------------------------------------------------------------
# node count law


def grid_cardinality(N: Sequence[int]) -> int:
    """prod_j (2 N_j + 1), the fewest nodes of any rule exact for T(2N)."""
    return math.prod(2 * int(n) + 1 for n in N)


def satisfies_node_count_law(rule: WeightedRule, N: Sequence[int]) -> bool:
    return len(rule) >= grid_cardinality(N)


def is_l2_exact(system: FunctionSystem, rule: WeightedRule, tol: float = 1e-8) -> bool:
    G = gram_of_rule(system, rule)
    return bool(np.max(np.abs(G - system.gram()), initial=0.0) <= tol)


def eigen_range(system: FunctionSystem, rule: WeightedRule) -> tuple[float, float]:
    G = gram_of_rule(system, rule)
    return sym_eig_extreme(G)
