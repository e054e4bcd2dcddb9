"""Constructions that witness lower bounds: quadratic difference-covering
sets, lacunary block sets with their small-ball probe, and the
homogeneous-monomial witness for exact weighted discretization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certify import linfty_lp_ratio
from .config import DEFAULT_TOL, child_seed
from .errors import Infeasible, InvalidArgument
from .exact import _greedy_lu
from .spaces import FrequencySet, explicit_set

MAX_FFT_GRID = 2**22
EXACT_REF_MAX = 4096


# ---------------------------------------------------------------------------
# difference-covering sets


def build_sidon_quadratic(N: int) -> FrequencySet:
    """Q = {j^2 : 0 <= j <= N} union {0, ..., 2N}.

    Examples
    --------
    >>> build_sidon_quadratic(1).freqs
    ((0,), (1,), (2,))
    """
    if N < 1:
        raise InvalidArgument("N must be positive")
    vals = sorted({j * j for j in range(N + 1)} | set(range(2 * N + 1)))
    return explicit_set([(v,) for v in vals], 1, kind="explicit", params={"construction": "quadratic", "N": N})


def sidon_size_bounds(N: int) -> tuple[float, int]:
    return 3 * N + 1 - math.sqrt(2 * N), 3 * N + 1


def difference_coverage(Q: FrequencySet, limit: int) -> list[int]:
    """Integers in [0, limit] that are not a difference of two elements of Q."""
    vals = np.array([k[0] for k in Q.freqs], dtype=np.int64)
    diffs = np.unique(np.abs(vals[:, None] - vals[None, :]))
    present = np.zeros(limit + 1, dtype=bool)
    present[diffs[diffs <= limit]] = True
    return [int(j) for j in np.flatnonzero(~present)]


def sidon_report(N: int) -> dict:
    Q = build_sidon_quadratic(N)
    lo, hi = sidon_size_bounds(N)
    missing = difference_coverage(Q, N * N)
    return {"N": N, "size": len(Q), "size_lower": lo, "size_upper": hi,
            "size_ok": lo <= len(Q) <= hi, "coverage_limit": N * N,
            "missing": missing, "coverage_ok": not missing, "freqs": Q.to_json()}


# ---------------------------------------------------------------------------
# lacunary block sets


@dataclass(frozen=True)
class ConditionLParams:
    """Block frequencies k_n, ..., k_{2n-1} with block half-width nu."""
    n: int
    b: float
    K: float
    nu: int
    k_values: tuple[int, ...]

    def violations(self) -> list[str]:
        out = []
        k = self.k_values
        if len(k) != self.n:
            out.append("count: need exactly n block frequencies")
            return out
        if any(k[j + 1] < self.b * k[j] for j in range(len(k) - 1)):
            out.append("growth: k_{j+1} >= b k_j")
        if k[0] <= 0 or any(kj % k[0] for kj in k):
            out.append("divisibility: every k_j divisible by k_n")
        if not self.nu <= (self.b - 1) * k[0] / 3:
            out.append("separation: nu <= (b - 1) k_n / 3")
        if not self.nu * self.n <= self.K * k[0]:
            out.append("size: nu n <= K k_n")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    @property
    def k_max(self) -> int:
        return self.k_values[-1]

    def frequencies(self) -> list[int]:
        """Lambda(K, nu): the union of k_j + [-nu, nu]."""
        return [kj + l for kj in self.k_values for l in range(-self.nu, self.nu + 1)]

    def to_json(self) -> dict:
        return {"n": self.n, "b": self.b, "K": self.K, "nu": self.nu,
                "k_values": [int(k) for k in self.k_values]}


def build_condition_l(n: int, b: float, nu: int, K: float, k_n: int | None = None) -> ConditionLParams:
    """k_j = k_n * ceil(b)^(j - n) with the smallest admissible positive k_n.

    Passing ``k_n`` fixes the base instead; clauses it breaks are named in
    the raised error.

    Raises
    ------
    Infeasible
        When some clause cannot hold, with the clause in the message.
    """
    if n < 1:
        raise InvalidArgument("n must be positive")
    if not b > 1:
        raise InvalidArgument("b must exceed 1")
    if nu < 0:
        raise InvalidArgument("nu must be nonnegative")
    if k_n is None:
        if nu > 0 and K <= 0:
            raise Infeasible("size: nu n <= K k_n has no solution with K <= 0", residual=nu * n)
        need = [1.0]
        if nu > 0:
            need += [nu * n / K, 3.0 * nu / (b - 1)]
        k_n = max(1, math.ceil(max(need) - 1e-12))
        while nu * n > K * k_n or nu > (b - 1) * k_n / 3:
            k_n += 1
    ratio = math.ceil(b)
    params = ConditionLParams(n, float(b), float(K), int(nu),
                              tuple(int(k_n) * ratio**j for j in range(n)))
    bad = params.violations()
    if bad:
        raise Infeasible("Condition L violated: " + "; ".join(bad), residual=float(len(bad)))
    return params


def _fft_size(top: int, oversample: int) -> int:
    L = 1 << max(1, math.ceil(math.log2(max(2, oversample * (2 * top + 1)))))
    if L > MAX_FFT_GRID:
        raise InvalidArgument(f"evaluation grid of {L} points exceeds the cap {MAX_FFT_GRID}")
    return L


def small_ball_probe(params: ConditionLParams, trials: int = 200, seed: int = 0,
                     oversample: int = 4) -> dict:
    """Largest observed sum_j ||p_j||_1 / ||f||_inf for f = sum_j p_j e^{i k_j x}.

    Each p_j has frequencies in [-nu, nu].  Probes combine complex Gaussian
    coefficients with flat ones (constant p_j of modulus 1, random phases,
    and the all-ones choice).  Norms are taken on FFT grids oversampled by
    ``oversample``; the grid maximum slightly underestimates ||f||_inf.
    """
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    nb, nu = params.n, params.nu
    width = 2 * nu + 1
    L = _fft_size(params.k_max + nu, oversample)
    Lp = _fft_size(nu, oversample)
    freqs = np.array(params.frequencies(), dtype=np.int64) % L
    local = np.array([l % Lp for l in range(-nu, nu + 1)], dtype=np.int64)

    best = (-math.inf, -1, "")
    values = []
    for t in range(trials):
        rng = np.random.default_rng(child_seed(seed, t))
        if t == 0:
            family = "ones"
            A = np.zeros((nb, width), dtype=complex)
            A[:, nu] = 1.0
        elif t % 2 == 1:
            family = "flat"
            A = np.zeros((nb, width), dtype=complex)
            A[:, nu] = np.exp(2j * np.pi * rng.random(nb))
        else:
            family = "gaussian"
            A = rng.standard_normal((nb, width)) + 1j * rng.standard_normal((nb, width))
        F = np.zeros(L, dtype=complex)
        np.add.at(F, freqs, A.ravel())
        sup = float(np.max(np.abs(np.fft.ifft(F) * L)))
        P = np.zeros((nb, Lp), dtype=complex)
        P[:, local] = A
        l1 = float(np.sum(np.mean(np.abs(np.fft.ifft(P, axis=1) * Lp), axis=1)))
        r = l1 / sup if sup > 0 else math.inf
        values.append(r)
        if r > best[0]:
            best = (r, t, family)
    return {"params": params.to_json(), "C_hat": best[0], "best_trial": best[1],
            "best_family": best[2], "best_seed": child_seed(seed, best[1]),
            "ones_ratio": values[0], "trials": trials, "seed": seed,
            "grid": L, "block_grid": Lp, "mean_ratio": float(np.mean(values))}


# ---------------------------------------------------------------------------
# lacunary fixed-set ratio


_RANDOM_BITS = 53


def _randbelow(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in [0, n) for n = 2^k of any size, from 32-bit draws."""
    bits = n.bit_length() - 1
    words = -(-bits // 32)
    v = 0
    for w in rng.integers(0, 2**32, size=max(words, 1), dtype=np.uint64):
        v = (v << 32) | int(w)
    return v % n


def _phase_matrix(numer: list[int], denom: int, freqs: list[int]) -> np.ndarray:
    """e^{i k x} at x = 2 pi numer/denom, with k x reduced mod 2 pi in exact integers."""
    out = np.empty((len(numer), len(freqs)), dtype=complex)
    for r, a in enumerate(numer):
        ph = [((k * a) % denom) / denom for k in freqs]
        out[r] = np.exp(2j * np.pi * np.array(ph))
    return out


def lacunary_ratio_probe(N_values=(4, 16, 64), b: float = 2.0, seed: int = 0,
                         families=("uniform", "random"), ref_samples: int = 256,
                         threads: int | None = None) -> list[dict]:
    """Fixed-set uniform-norm ratio for lacunary spans {e^{i k_j x}}, k_j = ceil(b)^j.

    For each N the span has the N frequencies of ``build_condition_l(N, b, 0, 1)``.
    Point families hold m = N points: the uniform grid 2 pi l/N, and seeded
    random dyadic points 2 pi a/2^53.  The ratio max |f(y)| / max |f(x_l)| is
    computed by LP over reference points y on the dyadic grid of size
    L >= 4 k_max: all of it when L <= EXACT_REF_MAX, otherwise
    ``ref_samples`` seeded points of it, which gives a lower bound.
    Phases are computed in exact integer arithmetic, so huge frequencies are
    evaluated correctly.  A ``dense`` family (the whole reference grid) is
    added as a sanity check when the reference grid is complete.
    """
    rows = []
    for i, N in enumerate(N_values):
        if not (1 <= N <= 64):
            raise InvalidArgument("N must lie in [1, 64]")
        p = build_condition_l(N, b, 0, 1.0)
        freqs = list(p.k_values)
        Lref = 1 << max(2, math.ceil(math.log2(4 * freqs[-1] + 2)))
        rng = np.random.default_rng(child_seed(seed, i))
        if Lref <= EXACT_REF_MAX:
            ref = list(range(Lref))
            exact_ref = True
        else:
            ref = sorted({_randbelow(rng, Lref) for _ in range(ref_samples)})
            exact_ref = False
        Vref = _phase_matrix(ref, Lref, freqs)
        fams = list(families) + (["dense"] if exact_ref else [])
        for fam in fams:
            if fam == "uniform":
                numer, denom = [l for l in range(N)], N
            elif fam == "random":
                denom = Lref << _RANDOM_BITS
                numer = [_randbelow(rng, denom) for _ in range(N)]
            elif fam == "dense":
                numer, denom = ref, Lref
            else:
                raise InvalidArgument(f"unknown family {fam!r}")
            Vp = _phase_matrix(numer, denom, freqs)
            res = linfty_lp_ratio(Vp, Vref, threads)
            ratio = float(res.ratio)
            rows.append({"N": N, "family": fam, "m": len(numer), "ratio": ratio,
                         "ratio_lower": float(res.lower), "unbounded": bool(res.unbounded),
                         "ratio_over_sqrtN": ratio / math.sqrt(N),
                         "reference": "complete" if exact_ref else f"sampled:{len(ref)}",
                         "k_max": int(freqs[-1]), "seed": seed})
    return rows


# ---------------------------------------------------------------------------
# homogeneous monomial witness


def homogeneous_exponents(N: int, q: int) -> np.ndarray:
    """K(N, q): exponent vectors with sum q, in lexicographic order."""
    from .universal import compositions
    return np.array(list(compositions(q, N)), dtype=np.int64)


@dataclass
class WitnessReport:
    points: np.ndarray
    weights: np.ndarray
    determinant: float
    residual: float
    uniform_deviation: float
    removal_residuals: list[float]
    extra: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.weights)

    def to_json(self) -> dict:
        return {"M": self.M, "points": self.points.tolist(), "weights": self.weights.tolist(),
                "determinant": self.determinant, "residual": self.residual,
                "uniform_deviation": self.uniform_deviation,
                "min_removal_residual": min(self.removal_residuals) if self.removal_residuals else None,
                **self.extra}


def uniform_weight_witness(N: int, q: int, seed: int = 0, pool_factor: int = 4,
                 max_retries: int = 6, tol: float = 1e-9) -> WitnessReport:
    """Discrete set Omega_M on which the degree-q homogeneous monomials need M nodes.

    M = binom(N + q - 1, q) points are chosen from a seeded pool in
    [-1, 1]^N by determinant greedy on the monomial matrix U.  With the
    uniform measure on Omega_M the moment equations U^T lam = U^T 1/M have
    the unique solution lam = 1/M, every entry nonzero, so no rule on fewer
    nodes of Omega_M is exact.  ``removal_residuals`` confirms this: each
    entry is the least-squares residual after dropping one node.
    """
    if q < 2 or q % 2:
        raise InvalidArgument("q must be a positive even integer")
    if N < 1:
        raise InvalidArgument("N must be positive")
    M = math.comb(N + q - 1, q)
    if M > 500:
        raise InvalidArgument("M exceeds 500")
    E = homogeneous_exponents(N, q)
    pool = max(pool_factor * M, M + 1)
    for attempt in range(max_retries):
        rng = np.random.default_rng(child_seed(seed, attempt))
        X = rng.uniform(-1.0, 1.0, size=(pool, N))
        V = np.prod(X[:, None, :] ** E[None, :, :], axis=2)
        sel = _greedy_lu(V, DEFAULT_TOL.determinant, True)
        if len(sel.indices) == M:
            break
        pool *= 2
    else:
        raise Infeasible("monomial matrix stayed singular on every candidate pool",
                         residual=float(M - len(sel.indices)))
    idx = np.sort(sel.indices)
    U = V[idx]
    rhs = U.T @ np.full(M, 1.0 / M)
    lam = np.linalg.solve(U.T, rhs)
    residual = float(np.max(np.abs(U.T @ lam - rhs)))
    sign, logdet = np.linalg.slogdet(U)
    det = float(sign * np.exp(logdet))
    dev = float(np.max(np.abs(lam - 1.0 / M)))
    removal = []
    if M > 1:
        for j in range(M):
            keep = np.delete(np.arange(M), j)
            A = U[keep].T
            x = np.linalg.lstsq(A, rhs, rcond=None)[0]
            removal.append(float(np.linalg.norm(A @ x - rhs)))
    return WitnessReport(X[idx], lam, det, residual, dev, removal,
                         {"N": N, "q": q, "seed": seed, "pool": pool,
                          "all_nonzero": bool(np.all(np.abs(lam) > tol)),
                          "unique": bool(abs(det) > DEFAULT_TOL.determinant)})
