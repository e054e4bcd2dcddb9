"""Greedy approximation of the identity matrix by rank-one atoms u(x)u(x)^T.

A rule {(x_nu, lam_nu)} is exact in L2 on an orthonormal span exactly when
sum_nu lam_nu u(x_nu) u(x_nu)^T = I, so building good point sets reduces to
approximating I in the Frobenius geometry by the dictionary of atoms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, InvalidArgument
from .exact import WeightedRule
from .spaces import FunctionSystem, PointSet


def gram_atom(system: FunctionSystem, x) -> np.ndarray:
    """G(x) = u(x) u(x)^T, a symmetric rank-one matrix with trace w(x)."""
    if system.is_complex:
        raise InvalidArgument("atoms are formed from real-valued systems")
    u = system(np.asarray(x, dtype=float).reshape(1, -1))[0]
    return np.outer(u, u)


def _scores(V: np.ndarray, R: np.ndarray) -> np.ndarray:
    # u(x)^T R u(x) for every candidate row
    return np.einsum("mi,ij,mj->m", V, R, V)


def _condition_e_scale(system: FunctionSystem, V: np.ndarray, t: float | None) -> tuple[float, float]:
    N = system.n_funcs
    if t is None:
        t = system.cond_e_bound
    if t is None:
        t = math.sqrt(float(np.max(np.sum(V**2, axis=1))) / N)
    return float(t), N * float(t) ** 2


@dataclass
class GreedyResult:
    rule: WeightedRule
    residual_norms: list[float]
    selected: np.ndarray
    B: float
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.selected)

    def trace_json(self) -> dict:
        return {"iteration": list(range(1, len(self.residual_norms) + 1)),
                "residual_frobenius": self.residual_norms, "B": self.B, **self.extra}


def oga_exact_l2(system: FunctionSystem, candidates: PointSet, max_iter: int | None = None,
                 tol: float = 1e-7, weakness: float = 1.0) -> GreedyResult:
    """Orthogonal greedy representation of I by atoms G(x), x among the candidates.

    At each step pick the candidate maximizing <R, G(x)>_F (or, for
    ``weakness`` < 1, the first one within that factor of the maximum), then
    replace the approximant by the Frobenius projection of I onto the span of
    all selected atoms.  The projection coefficients are the rule's weights.

    Raises
    ------
    Infeasible
        If the residual stays above ``tol`` after ``max_iter`` steps or no
        candidate correlates with the residual.
    """
    if not (0 < weakness <= 1):
        raise InvalidArgument("weakness must lie in (0, 1]")
    V = system(candidates.points)
    if np.iscomplexobj(V):
        raise InvalidArgument("atoms are formed from real-valued systems")
    N = system.n_funcs
    if max_iter is None:
        max_iter = N * (N + 1) // 2
    _, B = _condition_e_scale(system, V, None)
    I = np.eye(N)
    R = I.copy()
    norms = [float(np.linalg.norm(R))]
    chosen: list[int] = []
    atoms: list[np.ndarray] = []
    lam = np.zeros(0)
    while norms[-1] > tol and len(chosen) < max_iter:
        s = _scores(V, R) / B
        top = float(np.max(s))
        if top <= 1e-14:
            break
        j = int(np.flatnonzero(s >= weakness * top)[0])
        chosen.append(j)
        atoms.append(np.outer(V[j], V[j]).ravel())
        A = np.array(atoms).T
        lam = np.linalg.lstsq(A, I.ravel(), rcond=None)[0]
        R = I - (A @ lam).reshape(N, N)
        R = (R + R.T) / 2
        norms.append(float(np.linalg.norm(R)))
    if norms[-1] > tol:
        raise Infeasible(f"greedy residual stalled at {norms[-1]:.3e}; candidate set too small",
                         residual=norms[-1])
    idx = np.array(chosen, dtype=int)
    nodes = PointSet(candidates.dim, candidates.points[idx], candidates.frame)
    rule = WeightedRule(nodes, lam, ("exact_q:2",), {"method": "oga"})
    return GreedyResult(rule, norms[1:], idx, B, {"initial_residual": norms[0]})


def rga_equal_weight(system: FunctionSystem, candidates: PointSet, m: int,
                     t: float | None = None) -> GreedyResult:
    """Relaxed greedy algorithm with step 1/m: m points, repetition allowed.

    With B = N t^2 the dictionary is {G(x)/B}; step k picks the candidate
    maximizing u^T (I/B - G_{k-1}) u, where G_{k-1} is the running mean of
    the selected atoms divided by B.  ``residual_norms[k-1]`` is the
    normalized error ||(1/k) sum G - I||_F / B after k steps.
    """
    if m < 1:
        raise InvalidArgument("m must be positive")
    V = system(candidates.points)
    if np.iscomplexobj(V):
        raise InvalidArgument("atoms are formed from real-valued systems")
    N = system.n_funcs
    t, B = _condition_e_scale(system, V, t)
    I = np.eye(N)
    S = np.zeros((N, N))
    chosen: list[int] = []
    norms: list[float] = []
    for k in range(1, m + 1):
        H = I / B - (S / (k - 1) / B if k > 1 else 0.0)
        j = int(np.argmax(_scores(V, H)))
        chosen.append(j)
        S += np.outer(V[j], V[j])
        norms.append(float(np.linalg.norm(S / k - I)) / B)
    idx = np.array(chosen, dtype=int)
    nodes = PointSet(candidates.dim, candidates.points[idx], candidates.frame)
    rule = WeightedRule(nodes, np.full(m, 1.0 / m), ("positive", "probability"),
                        {"method": "rga", "t": t})
    return GreedyResult(rule, norms, idx, B, {"t": t})


def rga_bound(m: int) -> float:
    """Normalized error guarantee 2 / sqrt(m)."""
    return 2.0 / math.sqrt(m)
