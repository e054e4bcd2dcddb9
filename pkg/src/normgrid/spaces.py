"""Frequency sets, trigonometric polynomials, point sets and function systems.

The torus is parametrized by ``[0, 2*pi)^d`` with the normalized Lebesgue
measure; the unit cube frame ``[0, 1)^d`` is used by the dispersion and net
code.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation

TWO_PI = 2.0 * math.pi

KINDS = ("box", "hyperbolic", "dyadic_block", "lacunary", "explicit")
FRAMES = ("torus", "cube")


# ---------------------------------------------------------------------------
# frequency sets


@dataclass(frozen=True)
class FrequencySet:
    dim: int
    freqs: tuple[tuple[int, ...], ...]
    kind: str = "explicit"
    params: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgument("frequency set dimension must be >= 1")
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown frequency set kind {self.kind!r}")
        canon = tuple(sorted(set(tuple(int(c) for c in k) for k in self.freqs)))
        if len(canon) != len(self.freqs):
            raise InvalidArgument("duplicate frequencies")
        if any(len(k) != self.dim for k in canon):
            raise InvalidArgument("frequency vector of wrong length")
        object.__setattr__(self, "freqs", canon)

    def __len__(self) -> int:
        return len(self.freqs)

    def __iter__(self):
        return iter(self.freqs)

    def __contains__(self, k) -> bool:
        return tuple(k) in set(self.freqs)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.freqs, dtype=np.int64).reshape(len(self.freqs), self.dim)

    @property
    def degree(self) -> tuple[int, ...]:
        """Largest ``|k_j|`` per axis."""
        if not self.freqs:
            return (0,) * self.dim
        return tuple(int(v) for v in np.abs(self.array).max(axis=0))

    def is_symmetric(self) -> bool:
        s = set(self.freqs)
        return all(tuple(-c for c in k) in s for k in s)

    def symmetrized(self) -> "FrequencySet":
        s = set(self.freqs) | {tuple(-c for c in k) for k in self.freqs}
        if s == set(self.freqs):
            return self
        return FrequencySet(self.dim, tuple(s), "explicit")

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "kind": self.kind,
            "params": list(self.params),
            "freqs": [list(k) for k in self.freqs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FrequencySet":
        params = tuple(
            tuple(p) if isinstance(p, list) else p for p in data.get("params", [])
        )
        return cls(
            int(data["dim"]),
            tuple(tuple(int(c) for c in k) for k in data["freqs"]),
            data.get("kind", "explicit"),
            params,
        )


def build_box(N: Sequence[int]) -> FrequencySet:
    """Pi(N) = [-N_1, N_1] x ... x [-N_d, N_d]."""
    N = tuple(int(n) for n in N)
    if len(N) == 0:
        raise InvalidArgument("box needs at least one dimension")
    if any(n < 0 for n in N):
        raise InvalidArgument("box half-widths must be nonnegative")
    freqs = tuple(itertools.product(*(range(-n, n + 1) for n in N)))
    return FrequencySet(len(N), freqs, "box", N)


def build_hyperbolic(N: int, d: int) -> FrequencySet:
    """Gamma(N) = {k : prod_j max(|k_j|, 1) <= N}."""
    if N < 1 or d < 1:
        raise InvalidArgument("hyperbolic cross needs N >= 1 and d >= 1")
    out = []

    def rec(prefix: list[int], budget: int):
        if len(prefix) == d:
            out.append(tuple(prefix))
            return
        for a in range(0, budget + 1):
            if max(a, 1) > budget:
                break
            rest = budget // max(a, 1)
            if a == 0:
                rec(prefix + [0], rest)
            else:
                rec(prefix + [a], rest)
                rec(prefix + [-a], rest)

    rec([], N)
    return FrequencySet(d, tuple(out), "hyperbolic", (N, d))


def build_dyadic_block(s: Sequence[int]) -> FrequencySet:
    """R(s) = {k : |k_j| < 2^{s_j}}, the box with N_j = 2^{s_j} - 1."""
    s = tuple(int(v) for v in s)
    if len(s) == 0 or any(v < 0 for v in s):
        raise InvalidArgument("dyadic block needs nonnegative s of length >= 1")
    box = build_box(tuple(2**v - 1 for v in s))
    return FrequencySet(box.dim, box.freqs, "dyadic_block", s)


def explicit_set(freqs: Iterable[Sequence[int]], dim: int | None = None,
                 kind: str = "explicit", params: tuple = ()) -> FrequencySet:
    freqs = [tuple(int(c) for c in (k if np.ndim(k) else (k,))) for k in freqs]
    if dim is None:
        if not freqs:
            raise InvalidArgument("cannot infer dimension of empty set")
        dim = len(freqs[0])
    return FrequencySet(dim, tuple(freqs), kind, params)


# ---------------------------------------------------------------------------
# point sets


@dataclass(frozen=True, eq=False)
class PointSet:
    dim: int
    points: np.ndarray
    frame: str = "torus"

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise InvalidArgument(f"unknown frame {self.frame!r}")
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, self.dim)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        if pts.shape[1] != self.dim:
            raise InvalidArgument("point dimension does not match the set dimension")
        hi = TWO_PI if self.frame == "torus" else 1.0
        if pts.size and (np.any(pts < 0.0) or np.any(pts >= hi) or not np.all(np.isfinite(pts))):
            raise InvalidArgument(f"coordinates outside the half-open {self.frame} frame")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PointSet)
            and self.dim == other.dim
            and self.frame == other.frame
            and np.array_equal(self.points, other.points)
        )

    def to_json(self, weights: np.ndarray | None = None, tags: Sequence[str] = (),
                meta: dict | None = None) -> dict:
        out = {"dim": self.dim, "frame": self.frame, "points": self.points.tolist()}
        if weights is not None:
            out["weights"] = np.asarray(weights, dtype=float).tolist()
        if tags:
            out["tags"] = list(tags)
        if meta:
            out["meta"] = meta
        return out

    @classmethod
    def from_json(cls, data: dict) -> "PointSet":
        dim = int(data["dim"])
        pts = np.array(data["points"], dtype=float).reshape(-1, dim)
        return cls(dim, pts, data.get("frame", "torus"))

    def scaled_to_torus(self) -> "PointSet":
        if self.frame == "torus":
            return self
        return PointSet(self.dim, TWO_PI * self.points, "torus")

    def union(self, other: "PointSet") -> "PointSet":
        if other.dim != self.dim or other.frame != self.frame:
            raise InvalidArgument("cannot merge point sets of different shape")
        return PointSet(self.dim, np.vstack([self.points, other.points]), self.frame)


def wrap_torus(x: np.ndarray) -> np.ndarray:
    x = np.mod(np.asarray(x, dtype=float), TWO_PI)
    x[x >= TWO_PI] = 0.0
    return x


def torus_grid(sizes: Sequence[int]) -> PointSet:
    """Tensor grid with ``sizes[j]`` equispaced nodes 2*pi*n/size on axis j."""
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise InvalidArgument("grid sizes must be positive")
    axes = [TWO_PI * np.arange(s) / s for s in sizes]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return PointSet(len(sizes), pts, "torus")


def canonical_grid(N: Sequence[int]) -> PointSet:
    """The grid x^n = 2*pi*n_j/(2N_j+1), n in P(N)."""
    return torus_grid([2 * int(n) + 1 for n in N])


def random_torus_points(m: int, d: int, rng: np.random.Generator) -> PointSet:
    return PointSet(d, wrap_torus(TWO_PI * rng.random((m, d))), "torus")


# ---------------------------------------------------------------------------
# trigonometric polynomials


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    support: FrequencySet
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if c.shape[0] != len(self.support):
            raise InvalidArgument("coefficient count must equal the support size")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.support.dim

    def __call__(self, points) -> np.ndarray:
        pts = _as_points(points, self.dim)
        if len(self.support) == 0:
            return np.zeros(pts.shape[0], dtype=complex)
        phase = pts @ self.support.array.T.astype(float)
        return np.exp(1j * phase) @ self.coeffs

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        idx = {k: i for i, k in enumerate(self.support.freqs)}
        for k, i in idx.items():
            j = idx.get(tuple(-c for c in k))
            partner = 0.0 if j is None else self.coeffs[j]
            if abs(self.coeffs[i] - np.conj(partner)) > tol * max(1.0, abs(self.coeffs[i])):
                return False
        return True

    def derivative(self, orders: Sequence[int]) -> "TrigPolynomial":
        """Partial derivative of multi-order ``orders``."""
        k = self.support.array.astype(float)
        factor = np.prod((1j * k) ** np.asarray(orders, dtype=float), axis=1)
        return TrigPolynomial(self.support, self.coeffs * factor)

    def to_json(self) -> dict:
        return {
            "support": self.support.to_json(),
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TrigPolynomial":
        sup = FrequencySet.from_json(data["support"])
        c = np.array([complex(re, im) for re, im in data["coeffs"]], dtype=complex)
        return cls(sup, c)


def _as_points(points, dim: int) -> np.ndarray:
    if isinstance(points, PointSet):
        if points.frame != "torus" and dim:
            pts = points.points
        else:
            pts = points.points
    else:
        pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.shape[0] == dim else pts.reshape(-1, dim)
    if pts.shape[1] != dim:
        raise InvalidArgument(f"points of dimension {pts.shape[1]} for a {dim}-dimensional object")
    return pts


def evaluate(f: TrigPolynomial, x) -> complex:
    """Value of ``f`` at one point, summed with compensated (fsum) accumulation."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != f.dim:
        raise InvalidArgument("point dimension does not match the polynomial")
    if len(f.support) == 0:
        return 0j
    terms = np.exp(1j * (f.support.array.astype(float) @ x)) * f.coeffs
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def l2_norm_exact(f: TrigPolynomial) -> float:
    """Parseval: (sum |c_k|^2)^(1/2) for the normalized measure."""
    return float(math.sqrt(math.fsum(np.abs(f.coeffs) ** 2)))


def norm_grid_sizes(degree: Sequence[int], oversample: int) -> list[int]:
    return [int(oversample) * (2 * int(k) + 1) for k in degree]


def lq_norm_grid(f: TrigPolynomial, q: float, oversample: int = 2) -> float:
    """Grid estimate of ||f||_q; for q = inf the grid maximum (a lower bound)."""
    q = float(q)
    if not (q >= 1.0):
        raise InvalidArgument("exponent q must lie in [1, inf]")
    if oversample < 1:
        raise InvalidArgument("oversample must be a positive integer")
    grid = torus_grid(norm_grid_sizes(f.support.degree, oversample))
    vals = np.abs(f(grid))
    if math.isinf(q):
        return float(vals.max()) if vals.size else 0.0
    return float(np.mean(vals**q) ** (1.0 / q))


def random_trig_polynomial(Q: FrequencySet, rng: np.random.Generator,
                           real: bool = False) -> TrigPolynomial:
    """Complex Gaussian coefficients; ``real=True`` enforces c_{-k} = conj(c_k)."""
    c = rng.standard_normal(len(Q)) + 1j * rng.standard_normal(len(Q))
    if real:
        if not Q.is_symmetric():
            raise InvalidArgument("real polynomials need a symmetric support")
        idx = {k: i for i, k in enumerate(Q.freqs)}
        for k, i in idx.items():
            j = idx[tuple(-v for v in k)]
            if i == j:
                c[i] = c[i].real
            elif i < j:
                c[j] = np.conj(c[i])
    return TrigPolynomial(Q, c)


# ---------------------------------------------------------------------------
# function systems


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FunctionSystem:
    """N functions on a domain, evaluated column-wise on a batch of points.

    ``degree`` (per-axis trigonometric degree) lets the system build grids on
    which products of basis functions integrate exactly; tabulated systems
    carry their own finite domain with the uniform probability measure.
    """

    n_funcs: int
    dim: int
    evaluator: Evaluator
    domain: str = "torus"
    degree: tuple[int, ...] | None = None
    cond_e_bound: float | None = None
    is_complex: bool = False
    labels: tuple[str, ...] = ()
    tab_points: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    orthonormal = False

    def __call__(self, points) -> np.ndarray:
        pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, self.dim)
        if pts.shape[1] != self.dim:
            raise InvalidArgument("point dimension does not match the system")
        vals = np.asarray(self.evaluator(pts))
        return vals.reshape(pts.shape[0], self.n_funcs)

    # -- integration -------------------------------------------------------
    def integration_rule(self, power: int = 1, fallback: int = 256) -> tuple[PointSet, np.ndarray]:
        """Points and weights integrating products of ``power`` basis functions exactly.

        Torus systems with a known degree use the uniform grid with
        ``power*degree_j + 1`` nodes per axis; tabulated systems use their
        domain.  Torus systems without a degree fall back to a dense grid.
        """
        if self.domain == "tabulated":
            m = self.tab_points.shape[0]
            frame = self.meta.get("frame", "torus")
            return PointSet(self.dim, self.tab_points, frame), np.full(m, 1.0 / m)
        if self.domain != "torus":
            raise PreconditionViolation(f"no integration rule on a {self.domain} domain")
        if self.degree is not None:
            sizes = [power * k + 1 for k in self.degree]
        else:
            sizes = [fallback] * self.dim
        grid = torus_grid(sizes)
        return grid, np.full(len(grid), 1.0 / len(grid))

    def moments(self) -> np.ndarray:
        pts, w = self.integration_rule(1)
        return w @ self(pts)

    def gram(self) -> np.ndarray:
        pts, w = self.integration_rule(2)
        V = self(pts)
        return (np.conj(V).T * w) @ V

    def orthonormalized(self) -> "OrthoSystem":
        if self.orthonormal:
            return self  # type: ignore[return-value]
        G = self.gram()
        L = np.linalg.cholesky(G)
        Linv_T = np.linalg.inv(L).conj().T
        base = self
        return OrthoSystem(
            self.n_funcs, self.dim, lambda x: base.evaluator(x) @ Linv_T,
            self.domain, self.degree, None, self.is_complex,
            tuple(f"on[{i}]" for i in range(self.n_funcs)), self.tab_points, dict(self.meta),
        )

    def subsystem(self, indices: Sequence[int]) -> "FunctionSystem":
        idx = np.asarray(indices, dtype=int)
        base = self
        return FunctionSystem(
            len(idx), self.dim, lambda x: base.evaluator(x)[:, idx], self.domain,
            self.degree, None, self.is_complex,
            tuple(self.labels[i] for i in idx) if self.labels else (),
            self.tab_points, dict(self.meta),
        )

    def with_constant(self) -> "FunctionSystem":
        """The span with the constant function prepended."""
        base = self
        return FunctionSystem(
            self.n_funcs + 1, self.dim,
            lambda x: np.hstack([np.ones((x.shape[0], 1)), base.evaluator(x)]),
            self.domain, self.degree, None, self.is_complex,
            ("1",) + (self.labels or tuple(f"u{i}" for i in range(self.n_funcs))),
            self.tab_points, dict(self.meta),
        )

    def christoffel_max(self, points=None) -> float:
        """max over the given points (default: the product grid) of w(x) = sum |u_i(x)|^2."""
        if points is None:
            points, _ = self.integration_rule(2)
        V = self(points)
        return float(np.max(np.sum(np.abs(V) ** 2, axis=1)))


class OrthoSystem(FunctionSystem):
    """A function system orthonormal for the domain measure."""

    orthonormal = True

    def check(self, tol: float = 1e-8) -> float:
        """Max deviation of the Gram matrix from identity; raises above ``tol``."""
        dev = float(np.max(np.abs(self.gram() - np.eye(self.n_funcs)))) if self.n_funcs else 0.0
        if dev > tol:
            raise PreconditionViolation(f"system is not orthonormal (Gram deviation {dev:.3e})")
        if self.cond_e_bound is not None:
            bound = self.n_funcs * self.cond_e_bound**2
            if self.christoffel_max() > bound * (1 + 1e-10):
                raise PreconditionViolation("Condition E bound violated")
        return dev


def _real_reps(Q: FrequencySet) -> tuple[bool, list[tuple[int, ...]]]:
    """Whether 0 is in Q+(-Q), and one representative of each +-k pair."""
    sym = Q.symmetrized()
    zero = tuple([0] * Q.dim)
    reps = [k for k in sym.freqs if k > zero]
    return zero in sym, reps


def trig_system(Q: FrequencySet, real: bool = True) -> OrthoSystem:
    """Orthonormal basis of T(Q).

    ``real=True`` gives the real basis 1, sqrt2 cos(k.x), sqrt2 sin(k.x) of the
    real parts of T(Q + (-Q)), which equals T(Q) when Q is symmetric;
    ``real=False`` gives the complex exponentials of Q itself.  Both satisfy
    Condition E with t = 1.
    """
    if real:
        has_zero, reps = _real_reps(Q)
        K = np.array(reps, dtype=float).reshape(len(reps), Q.dim)
        n = int(has_zero) + 2 * len(reps)
        s2 = math.sqrt(2.0)
        labels = (("1",) if has_zero else ()) + tuple(
            lab for k in reps for lab in (f"cos{k}", f"sin{k}")
        )

        def ev(x, K=K, has_zero=has_zero):
            ph = x @ K.T
            out = np.empty((x.shape[0], n))
            off = 0
            if has_zero:
                out[:, 0] = 1.0
                off = 1
            out[:, off::2] = s2 * np.cos(ph)
            out[:, off + 1::2] = s2 * np.sin(ph)
            return out

        return OrthoSystem(n, Q.dim, ev, "torus", Q.degree, 1.0, False, labels,
                           meta={"freqs": Q.to_json(), "basis": "real"})
    K = Q.array.astype(float)

    def evc(x, K=K):
        return np.exp(1j * (x @ K.T))

    return OrthoSystem(len(Q), Q.dim, evc, "torus", Q.degree, 1.0, True,
                       tuple(str(k) for k in Q.freqs),
                       meta={"freqs": Q.to_json(), "basis": "complex"})


def trig_span(degree: int, parts: str = "full", normalized: bool = False) -> FunctionSystem:
    """Univariate spans built from 1, cos(kx), sin(kx), 1 <= k <= degree.

    ``parts``: ``full`` (all), ``sincos`` (no constant), ``cos`` (1 and
    cosines), ``sin`` (sines), ``const`` (just 1).  With ``normalized`` the
    non-constant functions carry the factor sqrt(2) and the result is
    orthonormal.
    """
    funcs: list[tuple[str, int, str]] = []
    if parts in ("full", "cos", "const"):
        funcs.append(("1", 0, "c"))
    if parts != "const":
        for k in range(1, degree + 1):
            if parts in ("full", "sincos", "cos"):
                funcs.append((f"cos{k}x", k, "c"))
            if parts in ("full", "sincos", "sin"):
                funcs.append((f"sin{k}x", k, "s"))
    if parts not in ("full", "sincos", "cos", "sin", "const"):
        raise InvalidArgument(f"unknown trig span {parts!r}")
    scale = math.sqrt(2.0) if normalized else 1.0
    ks = np.array([k for _, k, _ in funcs], dtype=float)
    is_cos = np.array([t == "c" for _, _, t in funcs])
    amp = np.where(ks == 0, 1.0, scale)

    def ev(x):
        ph = x[:, :1] * ks[None, :]
        return np.where(is_cos[None, :], np.cos(ph), np.sin(ph)) * amp[None, :]

    cls = OrthoSystem if normalized else FunctionSystem
    deg = degree if parts != "const" else 0
    return cls(len(funcs), 1, ev, "torus", (deg,), 1.0 if normalized else None, False,
               tuple(name for name, _, _ in funcs), meta={"span": f"trig:{degree}:{parts}"})


def tabulated_system(points, values: np.ndarray, frame: str = "torus",
                     orthonormal: bool | None = None, tol: float = 1e-8,
                     cond_e_bound: float | None = None) -> FunctionSystem:
    """System given by its values on a finite domain with the uniform measure."""
    pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    values = np.asarray(values)
    M, n = values.shape
    if pts.shape[0] != M:
        raise InvalidArgument("one row of values per domain point is required")
    lookup = {tuple(p): i for i, p in enumerate(pts)}

    def ev(x):
        try:
            idx = [lookup[tuple(p)] for p in x]
        except KeyError as exc:
            raise InvalidArgument("point outside the tabulated domain") from exc
        return values[idx]

    if orthonormal is None:
        gram = (np.conj(values).T @ values) / M
        orthonormal = bool(np.max(np.abs(gram - np.eye(n))) <= tol)
    cls = OrthoSystem if orthonormal else FunctionSystem
    sys_ = cls(n, pts.shape[1], ev, "tabulated", None, cond_e_bound,
               bool(np.iscomplexobj(values)), tuple(f"u{i}" for i in range(n)),
               pts, {"frame": frame})
    if orthonormal:
        sys_.check(tol)
    return sys_
