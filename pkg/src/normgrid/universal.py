"""Universal discretization for collections of subspaces, dispersion, and
(t, r, d)-nets in base 2.

Point sets for dispersion and nets live in the unit cube [0, 1)^d; they are
mapped to the torus by x -> 2 pi x when used for discretization.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .certify import certify_l1, certify_l2, certify_linfty
from .config import child_seed
from .errors import InvalidArgument, NormgridError
from .exact import WeightedRule
from .numkernel import sym_eig_extreme
from .spaces import (TWO_PI, FrequencySet, PointSet, build_box, build_dyadic_block,
                     explicit_set, trig_system, wrap_torus)

ENUMERATION_CAP = 100_000


# ---------------------------------------------------------------------------
# collections


@dataclass(frozen=True)
class NetParams:
    t: int
    r: int
    d: int

    def __post_init__(self):
        if min(self.t, self.r, self.d) < 0 or self.d < 1:
            raise InvalidArgument("net parameters must be nonnegative with d >= 1")
        if self.t > self.r:
            raise InvalidArgument("t must not exceed r")

    @property
    def size(self) -> int:
        return 2**self.r


@dataclass
class Collection:
    kind: str
    params: dict
    members: list[FrequencySet]
    ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    def descriptor(self) -> dict:
        return {"kind": self.kind, **self.params, "size": len(self.members)}


def compositions(n: int, d: int):
    """All s in Z_{>=0}^d with s_1 + ... + s_d = n, in lexicographic order."""
    if d == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, d - 1):
            yield (first,) + rest


def dyadic_collection(n: int, d: int) -> Collection:
    """C(n, d) = { T(R(s)) : ||s||_1 = n }, binom(n + d - 1, d - 1) members."""
    if n < 0 or d < 1:
        raise InvalidArgument("need n >= 0 and d >= 1")
    ss = list(compositions(n, d))
    return Collection("dyadic", {"n": n, "d": d}, [build_dyadic_block(s) for s in ss],
                      [f"s={s}" for s in ss])


def sparse_box(n: int, d: int) -> FrequencySet:
    """Pi_n: the box with N_j = 2^(n-1) - 1, of size (2^n - 1)^d."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    return build_box([2 ** (n - 1) - 1] * d)


def sparse_collection(v: int, n: int, d: int, sample_count: int = 200, seed: int = 0) -> Collection:
    """S(v, n): all v-subsets of Pi_n, or ``sample_count`` seeded ones when there are too many."""
    box = sparse_box(n, d)
    P = len(box)
    if not (1 <= v <= P):
        raise InvalidArgument("need 1 <= v <= |Pi_n|")
    total = math.comb(P, v)
    freqs = box.freqs
    if total <= ENUMERATION_CAP:
        combos = list(itertools.combinations(range(P), v))
        mode = "enumerated"
    else:
        combos = []
        for k in range(sample_count):
            rng = np.random.default_rng(child_seed(seed, k))
            combos.append(tuple(sorted(int(i) for i in rng.choice(P, size=v, replace=False))))
        mode = "sampled"
    members = [explicit_set([freqs[i] for i in c], d) for c in combos]
    return Collection("sparse", {"v": v, "n": n, "d": d, "mode": mode, "total": total},
                      members, [str(list(c)) for c in combos])


def _member_system(Q: FrequencySet):
    return trig_system(Q, real=Q.is_symmetric())


# ---------------------------------------------------------------------------
# dispersion


def _cube_points(T) -> np.ndarray:
    if isinstance(T, PointSet):
        if T.frame != "cube":
            raise InvalidArgument("dispersion is defined for cube point sets")
        return T.points
    pts = np.asarray(T, dtype=float)
    if pts.size and (np.any(pts < 0) or np.any(pts >= 1)):
        raise InvalidArgument("points outside [0, 1)^d")
    return pts


def _largest_gap(xs: np.ndarray) -> float:
    c = np.unique(np.concatenate([[0.0], xs, [1.0]]))
    return float(np.max(np.diff(c)))


def _disp_rec(pts: np.ndarray, d: int) -> float:
    """Largest open empty box volume; ``pts`` has d columns."""
    if pts.shape[0] == 0:
        return 1.0
    if d == 1:
        return _largest_gap(pts[:, 0])
    x = pts[:, 0]
    lows = np.unique(np.concatenate([[0.0], x]))
    highs = np.unique(np.concatenate([x, [1.0]]))
    order = np.argsort(x, kind="stable")
    xs = x[order]
    best = 0.0
    for lo in lows:
        sub_bound = 1.0
        for hi in highs[highs > lo]:
            width = hi - lo
            if width * sub_bound <= best:
                continue
            # points strictly inside the slab (lo, hi) on the first axis block it
            a = np.searchsorted(xs, lo, side="right")
            b = np.searchsorted(xs, hi, side="left")
            inside = pts[order[a:b], 1:]
            sub = _disp_rec(inside, d - 1)
            sub_bound = sub
            vol = width * sub
            if vol > best:
                best = vol
    return best


def dispersion(T) -> float:
    """Volume of the largest axis-parallel box in [0,1]^d whose interior avoids T.

    A largest empty box can be grown until each face touches a point or
    the cube boundary, so every face coordinate is 0, 1 or a point
    coordinate.  The sweep fixes the first-axis extent (lo, hi) among those
    values and recurses on the points strictly inside the slab, pruning
    slabs that cannot beat the current best.

    Examples
    --------
    >>> dispersion(np.array([[0.5, 0.5]]))
    0.5
    """
    pts = _cube_points(T)
    if pts.size == 0:
        return 1.0
    return _disp_rec(pts, pts.shape[1])


def _max_gaps(z: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Largest gap of {0, 1} and the selected sorted values, one per row of ``inside``."""
    if z.size == 0:
        return np.ones(len(inside))
    vals = np.where(inside, z[None, :], 0.0)
    prev = np.maximum.accumulate(vals, axis=1)
    before = np.concatenate([np.zeros((len(inside), 1)), prev[:, :-1]], axis=1)
    gaps = np.where(inside, z[None, :] - before, 0.0)
    return np.maximum(gaps.max(axis=1, initial=0.0), 1.0 - prev[:, -1])


def dispersion_bruteforce(T) -> float:
    """Exhaustive oracle independent of the slab sweep.

    Every choice of lower and upper faces among {0, coordinates, 1} on the
    first d - 1 axes is enumerated; for each such open box the best extent
    on the last axis is the largest gap between the last coordinates of the
    points inside it.  Cost is about |T|^(2d - 1).
    """
    pts = _cube_points(T)
    if pts.size == 0:
        return 1.0
    n, d = pts.shape
    order = np.argsort(pts[:, -1], kind="stable")
    pts = pts[order]
    z = pts[:, -1]
    if d == 1:
        return float(_max_gaps(z, np.ones((1, n), dtype=bool))[0])
    coords = [np.unique(np.concatenate([[0.0], pts[:, j], [1.0]])) for j in range(d - 1)]
    pairs = [np.triu_indices(len(c), 1) for c in coords]
    best = 0.0
    # loop over face pairs of the leading axes, vectorize the axis before last
    *outer, (la, lb) = pairs
    c_last = coords[-1]
    lo_v, hi_v = c_last[la], c_last[lb]
    inner_in = (pts[None, :, d - 2] > lo_v[:, None]) & (pts[None, :, d - 2] < hi_v[:, None])
    ext_v = hi_v - lo_v
    # widest leading extents first; a choice whose extents multiply to at
    # most the current best cannot improve it (all other factors are <= 1)
    orders = [np.argsort(-(coords[j][p[1]] - coords[j][p[0]]), kind="stable")
              for j, p in enumerate(outer)]
    for choice in itertools.product(*orders):
        mask = np.ones(n, dtype=bool)
        exts = []
        for j, c in enumerate(choice):
            lo, hi = coords[j][outer[j][0][c]], coords[j][outer[j][1][c]]
            mask &= (pts[:, j] > lo) & (pts[:, j] < hi)
            exts.append(hi - lo)
        if exts and math.prod(exts) <= best:
            continue
        cols = np.flatnonzero(mask)
        vol = ext_v * _max_gaps(z[cols], inner_in[:, cols])
        for e in reversed(exts):
            vol = e * vol
        best = max(best, float(vol.max()))
    return best


# ---------------------------------------------------------------------------
# nets


def verify_net(T, params: NetParams) -> tuple[bool, dict | None]:
    """Check that every dyadic box of volume 2^(t-r) holds exactly 2^t points.

    Boxes are half-open: prod_j [a_j 2^-s_j, (a_j + 1) 2^-s_j) with
    sum s_j = r - t.  Returns ``(True, None)`` or ``(False, box)`` for the
    first violating box in shape-then-position order.
    """
    pts = _cube_points(T)
    if pts.shape[0] != params.size:
        raise InvalidArgument(f"a (t,r,d)-net has exactly 2^r = {params.size} points")
    if pts.size and pts.shape[1] != params.d:
        raise InvalidArgument("point dimension does not match d")
    want = 2**params.t
    for s in compositions(params.r - params.t, params.d):
        cells = [np.floor(pts[:, j] * 2 ** s[j]).astype(np.int64) for j in range(params.d)]
        flat = np.ravel_multi_index(cells, [2**sj for sj in s])
        counts = np.bincount(flat, minlength=2 ** (params.r - params.t))
        bad = np.flatnonzero(counts != want)
        if bad.size:
            pos = np.unravel_index(int(bad[0]), [2**sj for sj in s])
            box = {
                "shape": list(s),
                "position": [int(a) for a in pos],
                "lower": [int(a) / 2**sj for a, sj in zip(pos, s)],
                "upper": [(int(a) + 1) / 2**sj for a, sj in zip(pos, s)],
                "count": int(counts[bad[0]]),
                "expected": want,
            }
            return False, box
    return True, None


def radical_inverse2(i: np.ndarray, r: int) -> np.ndarray:
    """Base-2 radical inverse of 0 <= i < 2^r (bit reversal over r bits)."""
    i = np.asarray(i, dtype=np.int64)
    out = np.zeros_like(i)
    for b in range(r):
        out |= ((i >> b) & 1) << (r - 1 - b)
    return out / float(2**r)


def build_hammersley_net(r: int, d: int = 2) -> PointSet:
    """{(i / 2^r, radical_inverse2(i)) : i < 2^r}, a (0, r, 2)-net."""
    if d != 2:
        raise InvalidArgument("only d = 2 nets are constructed")
    if not (0 <= r <= 20):
        raise InvalidArgument("r must lie in [0, 20]")
    i = np.arange(2**r)
    return PointSet(2, np.column_stack([i / 2.0**r, radical_inverse2(i, r)]), "cube")


def cube_to_torus(T: PointSet) -> PointSet:
    return PointSet(T.dim, wrap_torus(TWO_PI * T.points), "torus")


# ---------------------------------------------------------------------------
# certification over collections


def certify_universal(collection: Collection, points: PointSet, q: float,
                      refgrid_oversample: int = 2, probe_budget: int = 100, seed: int = 0,
                      threads: int | None = None) -> dict:
    """Run the q-certifier on every member; report the worst constants.

    For q = inf the per-member ratio R gives C1 = 1/R.  Members whose
    certifier raises are listed under ``failures`` and skipped.
    """
    if points.frame != "torus":
        points = cube_to_torus(points)
    rule = WeightedRule.equal_weight(points) if len(points) else None
    rows = []
    failures = []
    for k, Q in enumerate(collection.members):
        mid = collection.ids[k] if collection.ids else str(k)
        sys_ = _member_system(Q)
        try:
            if q == 2:
                c = certify_l2(sys_, rule)
                rows.append({"id": mid, "C1": c.C1, "C2": c.C2})
            elif q == 1:
                c = certify_l1(sys_, rule, probe_budget, child_seed(seed, k))
                rows.append({"id": mid, "C1": c.C1, "C2": c.C2})
            elif math.isinf(q):
                ratio, c = certify_linfty(sys_, points, refgrid_oversample, threads)
                rows.append({"id": mid, "C1": c.C1, "C2": c.C2, "ratio": ratio})
            else:
                raise InvalidArgument("q must be 1, 2 or inf")
        except InvalidArgument:
            raise
        except NormgridError as exc:
            failures.append({"id": mid, "error": str(exc)})
    if not rows:
        return {"collection": collection.descriptor(), "m": len(points), "q": q,
                "worst_C1": None, "worst_C2": None, "argmin": None,
                "failures": failures, "members": rows}
    i = min(range(len(rows)), key=lambda j: (rows[j]["C1"], j))
    report = {
        "collection": collection.descriptor(), "m": len(points),
        "q": "inf" if math.isinf(q) else q,
        "worst_C1": rows[i]["C1"], "worst_C2": max(r["C2"] for r in rows),
        "argmin": rows[i]["id"], "failures": failures, "members": rows, "seed": seed,
    }
    if math.isinf(q):
        report["worst_ratio"] = max(r["ratio"] for r in rows)
    return report


def dispersion_implies_universal_check(T: PointSet, r: int | None = None, c_max: int = 3,
                                       threshold: float = 10.0, refgrid_oversample: int = 2,
                                       threads: int | None = None) -> dict:
    """Dispersion of T and the worst L-inf ratio over C(r - c, 2) for c = 0..c_max.

    ``r`` defaults to log2 |T|.  Reports the smallest c whose worst-member
    ratio is finite and at most ``threshold``.
    """
    if T.dim != 2:
        raise InvalidArgument("this check is set up for d = 2")
    if r is None:
        r = int(round(math.log2(max(len(T), 1))))
    disp = dispersion(T)
    sweep = []
    smallest = None
    for c in range(0, c_max + 1):
        n = r - c
        if n < 0:
            break
        rep = certify_universal(dyadic_collection(n, 2), T, math.inf, refgrid_oversample,
                                threads=threads)
        ratio = rep.get("worst_ratio")
        sweep.append({"c": c, "n": n, "worst_ratio": ratio, "argmax": rep["argmin"]})
        if smallest is None and ratio is not None and math.isfinite(ratio) and ratio <= threshold:
            smallest = c
    return {"m": len(T), "r": r, "dispersion": disp, "dispersion_scaled": disp * 2**r,
            "threshold": threshold, "sweep": sweep, "smallest_c": smallest}


def universal_implies_dispersion_check(T: PointSet, n: int, refgrid_oversample: int = 2,
                                       threads: int | None = None) -> dict:
    """Given universality of T for C(n, d) in L-inf, fit C with disp(T) <= C 2^-n."""
    rep = certify_universal(dyadic_collection(n, T.dim), T, math.inf, refgrid_oversample,
                            threads=threads)
    disp = dispersion(T)
    universal = rep["worst_C1"] is not None and rep["worst_C1"] > 0 and not rep["failures"]
    fitted = disp * 2**n
    return {"m": len(T), "n": n, "universal": universal, "worst_ratio": rep.get("worst_ratio"),
            "worst_C1": rep["worst_C1"], "dispersion": disp, "fitted_C": fitted,
            "holds": bool(universal and disp <= fitted * 2.0**-n * (1 + 1e-12))}


def universal_random_for_sparse(v: int, n: int, d: int, q: int, m: int, seed: int,
                                sample_count: int = 200, probe_budget: int = 50,
                                lower: float = 0.5, upper: float = 1.5) -> dict:
    """Certify one iid draw of m points against every (or sampled) Q in S(v, n).

    A member fails when C1 < ``lower`` or C2 > ``upper``.
    """
    if q not in (1, 2):
        raise InvalidArgument("q must be 1 or 2")
    col = sparse_collection(v, n, d, sample_count, seed)
    rng = np.random.default_rng(child_seed(seed, 10**6))
    pts = PointSet(d, wrap_torus(TWO_PI * rng.random((m, d))), "torus")
    box = sparse_box(n, d)
    index = {k: i for i, k in enumerate(box.freqs)}
    C1s, C2s = [], []
    if q == 2:
        E = np.exp(1j * (pts.points @ box.array.T.astype(float)))
        G = (np.conj(E).T @ E) / m
        for Q in col.members:
            ii = [index[k] for k in Q.freqs]
            lo, hi = sym_eig_extreme(G[np.ix_(ii, ii)])
            C1s.append(lo)
            C2s.append(hi)
    else:
        rule = WeightedRule.equal_weight(pts)
        for k, Q in enumerate(col.members):
            c = certify_l1(trig_system(Q, real=False), rule, probe_budget, child_seed(seed, k))
            C1s.append(c.C1)
            C2s.append(c.C2)
    C1s, C2s = np.array(C1s), np.array(C2s)
    fail = (C1s < lower) | (C2s > upper)
    regime = v * v * n if q == 2 else v * v * n**4.5
    return {
        "collection": col.descriptor(), "m": m, "q": q, "seed": seed,
        "worst_C1": float(C1s.min()), "worst_C2": float(C2s.max()),
        "argmin": col.ids[int(np.argmin(C1s))],
        "failure_fraction": float(fail.mean()), "failures": [col.ids[i] for i in np.flatnonzero(fail)],
        "theory_m_scale": regime, "lower": lower, "upper": upper,
    }
