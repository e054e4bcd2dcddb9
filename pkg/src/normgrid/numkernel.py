"""Dense numeric primitives: determinants, extreme eigenvalues, NNLS and small LPs.

Thin, validated wrappers around LAPACK (via numpy) and HiGHS (via scipy),
with the post-condition checks the rest of the package relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .config import DEFAULT_TOL, Tolerances
from .errors import Infeasible, InvalidArgument, NumericalFailure


def _matrix(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise InvalidArgument(f"{name} must be a 2-d array")
    return A


def det_lu(A) -> float:
    """Determinant via partially pivoted LU.

    Examples
    --------
    >>> det_lu([[2.0, 0.0], [0.0, 3.0]])
    6.0
    """
    A = _matrix(A)
    if A.shape[0] != A.shape[1]:
        raise InvalidArgument("determinant of a non-square matrix")
    if A.shape[0] == 0:
        return 1.0
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0:
        return 0.0
    if np.iscomplexobj(A):
        return complex(sign * np.exp(logdet))
    return float(sign * np.exp(logdet))


def check_symmetric(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    A = _matrix(A)
    if A.shape[0] != A.shape[1]:
        raise InvalidArgument("matrix is not square")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if A.size and np.max(np.abs(A - np.conj(A.T))) > tol.symmetry * max(scale, 1e-300):
        raise InvalidArgument("matrix is not symmetric")
    return A


def sym_eig_extreme(A, tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric (or Hermitian) matrix."""
    A = check_symmetric(A, tol)
    if A.shape[0] == 0:
        raise InvalidArgument("empty matrix has no eigenvalues")
    w = np.linalg.eigvalsh((A + np.conj(A.T)) / 2)
    return float(w[0]), float(w[-1])


def nnls(A, b, tol: Tolerances = DEFAULT_TOL, maxiter: int | None = None) -> tuple[np.ndarray, float]:
    """Nonnegative least squares with a KKT post-check.

    Returns ``(x, residual_norm)``.  The gradient ``A.T (A x - b)`` must be
    nonnegative and complementary to ``x`` up to ``tol.feasibility`` relative
    to the data scale, otherwise :class:`NumericalFailure` is raised.
    """
    A = np.asarray(_matrix(A), dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != b.shape[0]:
        raise InvalidArgument("row count of A must match b")
    n = A.shape[1]
    if n == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    cap = maxiter if maxiter is not None else 3 * n
    try:
        x, rnorm = optimize.nnls(A, b, maxiter=max(cap, 50))
    except RuntimeError as exc:
        raise NumericalFailure(f"NNLS did not converge: {exc}") from exc
    grad = A.T @ (A @ x - b)
    scale = max(1.0, float(np.max(np.abs(A))) * max(1.0, float(np.max(np.abs(b))) if b.size else 1.0))
    if np.min(grad, initial=0.0) < -tol.feasibility * scale * 10 or \
            np.max(np.abs(grad * x), initial=0.0) > tol.feasibility * scale * max(1.0, float(np.max(x, initial=0.0))) * 10:
        raise NumericalFailure("NNLS result violates the KKT conditions", residual=float(rnorm))
    return x, float(rnorm)


@dataclass
class LPResult:
    value: float
    unbounded: bool
    x: np.ndarray | None = None
    ray: np.ndarray | None = None


def lp_chebyshev(constraints, objective, tol: Tolerances = DEFAULT_TOL) -> LPResult:
    """max a.c subject to -1 <= v_j.c <= 1 for every constraint row v_j.

    If ``a`` has a component in the null space of the constraint matrix the
    LP is unbounded and that component is returned as the certifying ray.

    Examples
    --------
    >>> lp_chebyshev([[1.0, 1.0], [1.0, -1.0]], [1.0, 0.0]).value
    1.0
    """
    a = np.asarray(objective, dtype=float).ravel()
    n = a.shape[0]
    V = np.asarray(constraints, dtype=float).reshape(-1, n)
    ray = _null_ray(V, a, tol)
    if ray is not None:
        return LPResult(np.inf, True, None, ray)
    res = optimize.linprog(
        -a, A_ub=np.vstack([V, -V]), b_ub=np.ones(2 * V.shape[0]),
        bounds=[(None, None)] * n, method="highs",
    )
    if res.status == 3:
        # the null-space test should have caught this; report a generic ray
        return LPResult(np.inf, True, None, None)
    if res.status != 0:
        raise NumericalFailure(f"LP solver failed: {res.message}")
    return LPResult(float(-res.fun), False, np.asarray(res.x))


def _null_ray(V: np.ndarray, a: np.ndarray, tol: Tolerances) -> np.ndarray | None:
    """Component of ``a`` orthogonal to the row space of ``V`` (None if negligible)."""
    if V.shape[0] == 0:
        return a.copy() if np.any(a != 0) else None
    _, s, vt = np.linalg.svd(V, full_matrices=True)
    rank = int(np.sum(s > s[0] * max(V.shape) * np.finfo(float).eps * 10)) if s.size and s[0] > 0 else 0
    null = vt[rank:]
    if null.shape[0] == 0:
        return None
    r = null.T @ (null @ a)
    if np.linalg.norm(r) <= 1e3 * np.finfo(float).eps * max(1.0, np.linalg.norm(a)):
        return None
    return r


@dataclass
class WeightedSolution:
    weights: np.ndarray
    norm: float
    dual: np.ndarray | None = None


def weighted_dual_norm(lam, mu, p_dual: float) -> float:
    """(sum |lam/mu|^p' mu)^(1/p'), and max |lam|/mu for p' = inf."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = np.abs(lam) / mu
    if np.isinf(p_dual):
        return float(np.max(r, initial=0.0))
    return float(np.sum(r**p_dual * mu) ** (1.0 / p_dual))


def min_weighted_norm_solution(A, b, mu, p_dual: float,
                               tol: Tolerances = DEFAULT_TOL) -> WeightedSolution:
    """Solution of A lam = b minimizing the mu-weighted p'-norm of lam/mu.

    p' = 2 has the closed form ``D A^T (A D A^T)^+ b`` with ``D = diag(mu)``;
    p' in {1, inf} are solved as linear programs, whose equality duals are
    returned (they describe the extremal function of the dual problem).

    Examples
    --------
    >>> min_weighted_norm_solution([[1.0, 1.0]], [1.0], [1.0, 1.0], np.inf).weights
    array([0.5, 0.5])
    """
    A = np.asarray(_matrix(A), dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    mu = np.asarray(mu, dtype=float).ravel()
    k, n = A.shape
    if mu.shape[0] != n or np.any(mu <= 0):
        raise InvalidArgument("weights mu must be positive, one per column")
    if p_dual not in (1, 2, np.inf):
        raise InvalidArgument("p_dual must be 1, 2 or inf")
    lsq = np.linalg.lstsq(A, b, rcond=None)[0]
    resid = float(np.linalg.norm(A @ lsq - b))
    if resid > tol.feasibility * max(1.0, float(np.linalg.norm(b))):
        raise Infeasible("moment system is inconsistent", residual=resid)

    if p_dual == 2:
        ADA = (A * mu) @ A.T
        y = np.linalg.lstsq(ADA, b, rcond=None)[0]
        lam = mu * (A.T @ y)
        return WeightedSolution(lam, weighted_dual_norm(lam, mu, 2), y)

    if p_dual == 1:
        # lam = lp - lm, minimize sum(lp + lm)
        c = np.ones(2 * n)
        res = optimize.linprog(c, A_eq=np.hstack([A, -A]), b_eq=b,
                               bounds=[(0, None)] * (2 * n), method="highs")
        if res.status != 0:
            raise NumericalFailure(f"LP solver failed: {res.message}")
        dual = np.asarray(res.eqlin.marginals)
        # ties: among minimizers pick the one with the smallest max |lam|/mu
        budget = res.fun * (1 + 1e-9) + 1e-14
        c2 = np.zeros(2 * n + 1)
        c2[-1] = 1.0
        A_ub = np.vstack([
            np.hstack([np.ones(2 * n), [0.0]]),
            np.hstack([np.eye(n), np.eye(n), -mu[:, None]]),
        ])
        res2 = optimize.linprog(c2, A_ub=A_ub, b_ub=np.r_[budget, np.zeros(n)],
                                A_eq=np.hstack([A, -A, np.zeros((k, 1))]), b_eq=b,
                                bounds=[(0, None)] * (2 * n + 1), method="highs")
        x = res2.x if res2.status == 0 else res.x
        lam = x[:n] - x[n:2 * n]
        return WeightedSolution(lam, weighted_dual_norm(lam, mu, 1), dual)

    # p' = inf: minimize s with |lam| <= s mu
    c = np.zeros(n + 1)
    c[-1] = 1.0
    eye = np.eye(n)
    A_ub = np.vstack([np.hstack([eye, -mu[:, None]]), np.hstack([-eye, -mu[:, None]])])
    res = optimize.linprog(c, A_ub=A_ub, b_ub=np.zeros(2 * n),
                           A_eq=np.hstack([A, np.zeros((k, 1))]), b_eq=b,
                           bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status != 0:
        raise NumericalFailure(f"LP solver failed: {res.message}")
    dual = np.asarray(res.eqlin.marginals)
    # ties: among minimizers pick the one with the smallest sum |lam|
    cap = res.x[-1] * (1 + 1e-9) + 1e-14
    res2 = optimize.linprog(np.ones(2 * n), A_eq=np.hstack([A, -A]), b_eq=b,
                            bounds=[(0, cap * m) for m in np.r_[mu, mu]], method="highs")
    lam = res2.x[:n] - res2.x[n:] if res2.status == 0 else res.x[:n]
    return WeightedSolution(lam, weighted_dual_norm(lam, mu, np.inf), dual)
