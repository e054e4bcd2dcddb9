"""Command-line front end.

Every report is a JSON object that embeds the resolved run configuration
(seed, tolerances, oversampling, format).  Thread counts are left out so
reports are byte-identical across ``--threads`` values.

Exit codes: 0 success, 2 certification below ``--min-c1``, 1 usage or I/O
error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import certify, exact, extremal, greedy, hypercross, sampling, spaces, universal
from .config import DEFAULT_TOL, resolve_threads
from .errors import NormgridError
from .io import dumps, points_csv, read_json

EXIT_OK, EXIT_ERROR, EXIT_BELOW = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument parsing helpers


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v != ""]


def parse_space(spec: str):
    """Build a function system from a compact descriptor.

    ``box:N1,N2``, ``hyp:N:d``, ``dyadic:s1,s2``, ``trig:deg:parts``,
    ``sidon:N``, ``lacunary:n:b`` or a path to a frequency-set JSON file.
    Frequency sets give the orthonormal exponential system, real when the set
    is symmetric under k -> -k.
    """
    kind, _, rest = spec.partition(":")
    if kind == "trig":
        deg, _, parts = rest.partition(":")
        return spaces.trig_span(int(deg), parts or "full", normalized=True), None
    if kind == "box":
        Q = spaces.build_box(_ints(rest))
    elif kind == "hyp":
        N, _, d = rest.partition(":")
        Q = spaces.build_hyperbolic(int(N), int(d or 1))
    elif kind == "dyadic":
        Q = spaces.build_dyadic_block(_ints(rest))
    elif kind == "sidon":
        Q = extremal.build_sidon_quadratic(int(rest))
    elif kind == "lacunary":
        n, _, b = rest.partition(":")
        p = extremal.build_condition_l(int(n), float(b or 2), 0, 1.0)
        Q = spaces.explicit_set([(k,) for k in p.k_values], 1)
    elif Path(spec).exists():
        Q = spaces.FrequencySet.from_json(read_json(spec))
    else:
        raise UsageError(f"unrecognized space spec {spec!r}")
    return spaces.trig_system(Q, real=Q.is_symmetric()), Q


def parse_points(spec: str | None, system=None, seed: int = 0, dim: int | None = None,
                 frame: str = "torus"):
    """``grid`` (canonical grid of the space), ``grid:K`` (K per axis),
    ``random:m``, ``empty`` or a JSON file with a point set or rule.

    Returns (PointSet, weights or None).
    """
    if spec is None:
        spec = "grid"
    d = dim if dim is not None else (system.dim if system is not None else 1)
    if spec == "grid":
        if system is None or system.degree is None:
            raise UsageError("--points grid needs a space with a degree")
        return spaces.canonical_grid(system.degree), None
    if spec.startswith("grid:"):
        pts = spaces.torus_grid([int(spec[5:])] * d)
        if frame == "cube":
            pts = spaces.PointSet(d, pts.points / spaces.TWO_PI, "cube")
        return pts, None
    if spec.startswith("random:"):
        rng = np.random.default_rng(seed)
        m = int(spec[7:])
        if frame == "cube":
            return spaces.PointSet(d, rng.random((m, d)), "cube"), None
        return spaces.random_torus_points(m, d, rng), None
    if spec == "empty":
        return spaces.PointSet(d, np.zeros((0, d)), frame), None
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"point file {spec!r} not found")
    data = read_json(path)
    if isinstance(data, list):
        arr = np.array(data, dtype=float)
        if arr.size == 0:
            return spaces.PointSet(d, np.zeros((0, d)), frame), None
        arr = arr.reshape(len(data), -1)
        return spaces.PointSet(arr.shape[1], arr, frame), None
    # full command reports wrap the rule or point set one level down
    if isinstance(data.get("rule"), dict):
        data = data["rule"]
    elif isinstance(data.get("points"), dict):
        data = data["points"]
    if "points" not in data:
        raise UsageError(f"{spec!r} holds no points")
    if "dim" not in data:
        data = dict(data, dim=d)
    pts = spaces.PointSet.from_json(data)
    w = data.get("weights")
    return pts, (np.array(w, dtype=float) if w is not None else None)


def _rule(pts, weights, probability: bool = False):
    if weights is None:
        return exact.WeightedRule.equal_weight(pts)
    return exact.WeightedRule(pts, weights, ("probability",) if probability else (), tol=1e-8)


def _q(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _below(report: dict, key: str, threshold: float) -> bool:
    v = report.get(key)
    return v is None or not (v > threshold)


# ---------------------------------------------------------------------------
# command implementations; each returns (report, csv payload or None, exit code)


def cmd_spaces_build(a):
    system, Q = parse_space(a.space)
    rep = {"n_funcs": system.n_funcs, "dim": system.dim, "labels": list(system.labels or ())}
    if Q is not None:
        rep["freqs"] = Q.to_json()
        return rep, ("freqs", np.array(Q.freqs, dtype=float), None), EXIT_OK
    return rep, None, EXIT_OK


def _rule_report(system, rule, extra=None):
    rep = {"rule": rule.to_json(), "nodes": len(rule), "N": system.n_funcs,
           "moment_residual": exact.moment_residual(system, rule)}
    if rule.weights.size:
        rep["min_weight"] = float(rule.weights.min())
        rep["weight_sum"] = math.fsum(rule.weights)
    if extra:
        rep.update(extra)
    return rep, ("points", rule.points, rule.weights), EXIT_OK


def cmd_exact_cubature(a):
    system, _ = parse_space(a.space)
    cand = parse_points(a.candidates, system, a.seed)[0] if a.candidates else None
    return _rule_report(system, exact.exact_cubature(system, cand, tol=a.tol_obj))


def cmd_exact_lift(a):
    system, _ = parse_space(a.space)
    rule = exact.exact_weighted_discretization(system, a.q, tol=a.tol_obj)
    M = exact.lift_size(system.n_funcs, a.q)
    C = np.random.default_rng(a.seed).standard_normal((a.trials, system.n_funcs))
    exact_vals = np.real(exact.lq_power_integral(system, C, a.q, a.oversample_lq))
    approx = rule.weights @ np.real(system(rule.points) @ C.T) ** a.q
    errs = np.abs(approx - exact_vals) / np.maximum(np.abs(exact_vals), 1e-300)
    return {"rule": rule.to_json(), "nodes": len(rule), "q": a.q, "N": system.n_funcs,
            "lift_dimension": M, "max_relative_error": float(errs.max()) if errs.size else 0.0,
            "trials": a.trials}, ("points", rule.points, rule.weights), EXIT_OK


def cmd_exact_tchakaloff(a):
    system, _ = parse_space(a.space)
    cand = spaces.torus_grid([a.grid] * system.dim) if a.grid else None
    if a.probability:
        rule = exact.tchakaloff_probability(system, cand, tol=a.tol_obj)
    else:
        rule = exact.tchakaloff_compress(system, candidates=cand, tol=a.tol_obj)
    return _rule_report(system, rule, {"probability": bool(a.probability)})


def cmd_exact_stable(a):
    system, _ = parse_space(a.space)
    W, _ = parse_points(a.points, system, a.seed)
    mu = np.full(len(W), 1.0 / len(W))
    sw = exact.stable_exact_weights(system, W, mu, _q(a.p), a.oversample, seed=a.seed,
                                    tol=a.tol_obj)
    rep = {"weights": sw.weights, "p": "inf" if math.isinf(sw.p) else sw.p,
           "stability_norm": sw.stability_norm, "measured_c1": sw.measured_c1,
           "method": sw.method, "ok": sw.ok, "m": len(W)}
    return rep, ("points", W.points, sw.weights), EXIT_OK if sw.ok else EXIT_BELOW


def cmd_exact_recover(a):
    system, _ = parse_space(a.space)
    cand = parse_points(a.candidates, system, a.seed)[0] if a.candidates else exact.default_candidates(system)
    nodes = exact.select_nodes_by_determinant(system, cand, a.tol_obj)
    rec = exact.build_recovery(system, nodes, a.tol_obj)
    probes = spaces.random_torus_points(64, system.dim, np.random.default_rng(a.seed)).points
    return {"nodes": nodes.to_json(), "coefficients": np.asarray(rec.coeffs).tolist()
            if not np.iscomplexobj(rec.coeffs) else {"re": np.real(rec.coeffs).tolist(),
                                                     "im": np.imag(rec.coeffs).tolist()},
            "reproduction_error": rec.reproduction_error(probes)}, \
        ("points", nodes.points, None), EXIT_OK


def cmd_greedy_oga(a):
    system, _ = parse_space(a.space)
    cand, _ = parse_points(a.candidates, system, a.seed)
    res = greedy.oga_exact_l2(system, cand, a.max_iter, a.residual_tol)
    cert = certify.certify_l2(system, res.rule, a.tol_obj)
    return {"rule": res.rule.to_json(), "iterations": res.iterations, "trace": res.trace_json(),
            "certificate": cert.to_json()}, ("points", res.rule.points, res.rule.weights), EXIT_OK


def cmd_greedy_rga(a):
    system, _ = parse_space(a.space)
    cand, _ = parse_points(a.candidates, system, a.seed)
    res = greedy.rga_equal_weight(system, cand, a.m, a.t)
    bounds = [greedy.rga_bound(k) for k in range(1, a.m + 1)]
    viol = [k + 1 for k, (e, b) in enumerate(zip(res.residual_norms, bounds)) if e > b]
    return {"trace": res.trace_json(), "bound": bounds, "violations": viol,
            "m": a.m}, ("points", res.rule.points, res.rule.weights), EXIT_OK if not viol else EXIT_BELOW


def cmd_random_plan(a):
    return sampling.plan_sample_size(a.N, a.t, a.eps, a.delta).to_json(), None, EXIT_OK


def _cert_exit(cert_json: dict, a) -> int:
    return EXIT_BELOW if _below(cert_json, "C1", a.min_c1) else EXIT_OK


def cmd_random_sample(a):
    system, _ = parse_space(a.space)
    if a.q == 2:
        pts, cert = sampling.sample_and_certify_l2(system, a.m, a.seed, a.mode, a.tol_obj)
    else:
        pts, cert = sampling.sample_and_certify_l1(system, a.m, a.seed, a.probe_budget,
                                                   tol=a.tol_obj)
    c = cert.to_json()
    return {"certificate": c, "points": pts.to_json()}, ("points", pts.points, None), _cert_exit(c, a)


def cmd_random_subset(a):
    system, _ = parse_space(a.space)
    dom, _ = parse_points(a.domain, system, a.seed)
    J, cert = sampling.subset_select_discrete(system, a.m, a.trials, a.seed, dom,
                                              resolve_threads(a.threads), a.tol_obj)
    c = cert.to_json()
    return {"certificate": c, "indices": J.tolist()}, ("points", dom.points[J], None), _cert_exit(c, a)


def cmd_random_domain(a):
    system, _ = parse_space(a.space)
    md = sampling.monte_carlo_domain(system, a.delta, a.seed, tol=a.tol_obj)
    return md.to_json(), ("points", md.points.points, None), EXIT_OK


def _load_rule(a, system):
    pts, w = parse_points(a.points, system, a.seed)
    return pts, _rule(pts, w, a.probability)


def cmd_certify_l2(a):
    system, _ = parse_space(a.space)
    _, rule = _load_rule(a, system)
    c = certify.certify_l2(system, rule, a.tol_obj).to_json()
    return {"certificate": c}, None, _cert_exit(c, a)


def cmd_certify_l1(a):
    system, _ = parse_space(a.space)
    _, rule = _load_rule(a, system)
    c = certify.certify_l1(system, rule, a.probe_budget, a.seed, a.oversample_l1, a.tol_obj).to_json()
    return {"certificate": c}, None, _cert_exit(c, a)


def cmd_certify_linf(a):
    system, _ = parse_space(a.space)
    pts, _ = parse_points(a.points, system, a.seed)
    ratio, cert = certify.certify_linfty(system, pts, a.oversample, resolve_threads(a.threads),
                                         a.tol_obj)
    c = cert.to_json()
    return {"certificate": c, "ratio": ratio}, None, _cert_exit(c, a)


def cmd_certify_remez(a):
    system, _ = parse_space(a.space)
    rep = certify.remez_check(system, a.measure, a.trials, a.seed, a.oversample_l1)
    return rep, None, EXIT_OK


def cmd_certify_bernstein(a):
    return certify.bernstein_probe(a.N, a.d, a.trials, a.seed, a.oversample_l1), None, EXIT_OK


def _hc_params(a):
    C0 = a.C0 if a.C0 is not None else 4.0
    return hypercross.HypercrossSetParams(a.N, a.d, a.eps, C0, a.base_grid_factor)


def cmd_hypercross_build(a):
    W = hypercross.build_w(_hc_params(a))
    return {"meta": W.meta, "points": W.points.to_json()}, ("points", W.points.points, None), EXIT_OK


def cmd_hypercross_verify(a):
    if a.points:
        pts, _ = parse_points(a.points, None, a.seed, dim=a.d)
        meta = {}
    else:
        W = hypercross.build_w(_hc_params(a))
        pts, meta = W.points, W.meta
    system = hypercross.hyperbolic_system(a.N, a.d)
    rep = hypercross.verify_w(system, pts, a.oversample, a.trials, a.seed, a.mode, a.lp_samples,
                              resolve_threads(a.threads))
    rep["set"] = meta
    code = EXIT_OK if math.isfinite(rep["C_hat"]) else EXIT_BELOW
    return rep, None, code


def cmd_universal_dispersion(a):
    pts, _ = parse_points(a.points, None, a.seed, dim=a.dim, frame="cube")
    if pts.frame != "cube":
        pts = spaces.PointSet(pts.dim, pts.points, "cube")
    rep = {"dispersion": universal.dispersion(pts), "m": len(pts), "dim": pts.dim}
    if a.check:
        rep["bruteforce"] = universal.dispersion_bruteforce(pts)
        rep["agree"] = rep["bruteforce"] == rep["dispersion"]
    return rep, None, EXIT_OK


def cmd_universal_net(a):
    if a.points:
        pts, _ = parse_points(a.points, None, a.seed, dim=a.dim, frame="cube")
        pts = spaces.PointSet(pts.dim, pts.points, "cube")
    else:
        pts = universal.build_hammersley_net(a.r, 2)
    params = universal.NetParams(a.t, a.r, pts.dim)
    ok, box = universal.verify_net(pts, params)
    rep = {"ok": ok, "violating_box": box, "t": a.t, "r": a.r, "d": pts.dim,
           "points": pts.to_json()}
    return rep, ("points", pts.points, None), EXIT_OK if ok else EXIT_BELOW


def cmd_universal_collection(a):
    col = universal.dyadic_collection(a.n, a.d)
    if a.points:
        pts, _ = parse_points(a.points, None, a.seed, dim=a.d)
    else:
        pts = universal.cube_to_torus(universal.build_hammersley_net(a.r, 2)) if a.r is not None \
            else spaces.torus_grid([2 ** (a.n + 1)] * a.d)
    rep = universal.certify_universal(col, pts, _q(a.q), a.oversample, a.probe_budget, a.seed,
                                      resolve_threads(a.threads))
    return rep, None, EXIT_BELOW if _below(rep, "worst_C1", a.min_c1) else EXIT_OK


def cmd_universal_sparse(a):
    rep = universal.universal_random_for_sparse(a.v, a.n, a.d, int(a.q), a.m, a.seed,
                                                a.sample_count, a.probe_budget)
    return rep, None, EXIT_BELOW if _below(rep, "worst_C1", a.min_c1) else EXIT_OK


def cmd_extremal_sidon(a):
    rep = extremal.sidon_report(a.N)
    code = EXIT_OK if rep["size_ok"] and rep["coverage_ok"] else EXIT_BELOW
    return rep, ("freqs", np.array([k for k in extremal.build_sidon_quadratic(a.N).freqs],
                                   dtype=float), None), code


def cmd_extremal_lacunary(a):
    rows = extremal.lacunary_ratio_probe(tuple(_ints(a.N_values)), a.b, a.seed,
                                         threads=resolve_threads(a.threads))
    return {"rows": rows}, None, EXIT_OK


def cmd_extremal_smallball(a):
    p = extremal.build_condition_l(a.n, a.b, a.nu, a.K)
    return extremal.small_ball_probe(p, a.trials, a.seed), None, EXIT_OK


def cmd_extremal_witness(a):
    w = extremal.uniform_weight_witness(a.N, a.q, a.seed)
    code = EXIT_OK if w.residual <= 1e-9 and w.extra["unique"] else EXIT_BELOW
    return w.to_json(), ("points", w.points, w.weights), code


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None,
                   help="override every tolerance with one value")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--oversample", type=int, default=2, help="reference grid oversampling")


def _space(p, required=True):
    p.add_argument("--space", required=required, help="box:N, hyp:N:d, dyadic:s, trig:deg:parts, ...")


def _points(p, default="grid"):
    p.add_argument("--points", default=default)
    p.add_argument("--probability", action="store_true", help="weights of the point file sum to 1")


def _threshold(p):
    p.add_argument("--min-c1", type=float, default=0.0, dest="min_c1",
                   help="exit 2 when the lower constant does not exceed this")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="normgrid", description="Sampling discretization toolkit")
    top = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def group(name):
        g = top.add_parser(name)
        return g.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(sub, name, fn):
        p = sub.add_parser(name)
        _common(p)
        p.set_defaults(fn=fn)
        return p

    s = group("spaces")
    _space(cmd(s, "build", cmd_spaces_build))

    s = group("exact")
    p = cmd(s, "cubature", cmd_exact_cubature); _space(p); p.add_argument("--candidates")
    p = cmd(s, "lift", cmd_exact_lift); _space(p)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--oversample-lq", type=int, default=64, dest="oversample_lq")
    p = cmd(s, "tchakaloff", cmd_exact_tchakaloff); _space(p)
    p.add_argument("--grid", type=int, default=None, help="candidate grid side")
    p.add_argument("--probability", action="store_true")
    p = cmd(s, "stable", cmd_exact_stable); _space(p); _points(p)
    p.add_argument("--p", default="2")
    p = cmd(s, "recover", cmd_exact_recover); _space(p); p.add_argument("--candidates")

    s = group("greedy")
    p = cmd(s, "oga", cmd_greedy_oga); _space(p)
    p.add_argument("--candidates", default="grid")
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p.add_argument("--residual-tol", type=float, default=1e-7, dest="residual_tol")
    p = cmd(s, "rga", cmd_greedy_rga); _space(p)
    p.add_argument("--candidates", default="grid")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--t", type=float, default=None)

    s = group("random")
    p = cmd(s, "plan", cmd_random_plan)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.1)
    p = cmd(s, "sample", cmd_random_sample); _space(p); _threshold(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--q", type=int, choices=(1, 2), default=2)
    p.add_argument("--mode", choices=("iid", "grid"), default="iid")
    p.add_argument("--probe-budget", type=int, default=200, dest="probe_budget")
    p = cmd(s, "subset", cmd_random_subset); _space(p); _threshold(p)
    p.add_argument("--domain", default="grid")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, default=50)
    p = cmd(s, "domain", cmd_random_domain); _space(p)
    p.add_argument("--delta", type=float, default=0.25)

    s = group("certify")
    for name, fn in (("l1", cmd_certify_l1), ("l2", cmd_certify_l2), ("linf", cmd_certify_linf)):
        p = cmd(s, name, fn); _space(p); _points(p); _threshold(p)
        p.add_argument("--probe-budget", type=int, default=200, dest="probe_budget")
        p.add_argument("--oversample-l1", type=int, default=None, dest="oversample_l1",
                       help="L1 reference grid factor (default: adaptive)")
    p = cmd(s, "remez", cmd_certify_remez); _space(p)
    p.add_argument("--measure", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--oversample-l1", type=int, default=4, dest="oversample_l1")
    p = cmd(s, "bernstein", cmd_certify_bernstein)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--oversample-l1", type=int, default=4, dest="oversample_l1")

    s = group("hypercross")
    for name, fn in (("build", cmd_hypercross_build), ("verify", cmd_hypercross_verify)):
        p = cmd(s, name, fn)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--eps", type=float, default=0.1)
        p.add_argument("--C0", type=float, default=None)
        p.add_argument("--base-grid-factor", type=float, default=4.0, dest="base_grid_factor")
    p.add_argument("--points", default=None)
    p.add_argument("--mode", choices=("auto", "exact", "probe"), default="auto")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--lp-samples", type=int, default=16, dest="lp_samples")

    s = group("universal")
    p = cmd(s, "dispersion", cmd_universal_dispersion)
    p.add_argument("--points", default="empty")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--check", action="store_true", help="also run the brute-force oracle")
    p = cmd(s, "net", cmd_universal_net)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--points", default=None)
    p.add_argument("--dim", type=int, default=2)
    p = cmd(s, "collection", cmd_universal_collection); _threshold(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--q", default="2")
    p.add_argument("--points", default=None)
    p.add_argument("--r", type=int, default=None, help="use the Hammersley net with 2^r points")
    p.add_argument("--probe-budget", type=int, default=100, dest="probe_budget")
    p = cmd(s, "sparse", cmd_universal_sparse); _threshold(p)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--q", choices=("1", "2"), default="2")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sample-count", type=int, default=200, dest="sample_count")
    p.add_argument("--probe-budget", type=int, default=50, dest="probe_budget")

    s = group("extremal")
    p = cmd(s, "sidon", cmd_extremal_sidon); p.add_argument("--N", type=int, required=True)
    p = cmd(s, "lacunary", cmd_extremal_lacunary)
    p.add_argument("--N-values", default="4,16", dest="N_values")
    p.add_argument("--b", type=float, default=2.0)
    p = cmd(s, "smallball", cmd_extremal_smallball)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--nu", type=int, default=0)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=200)
    p = cmd(s, "witness", cmd_extremal_witness)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--q", type=int, default=2)
    return parser


def _config(a) -> dict:
    return {"seed": a.seed, "tolerances": a.tol_obj.as_dict(), "oversample": a.oversample,
            "format": a.format, "command": f"{a.group} {a.command}"}


def _csv(payload, report) -> str:
    if payload is None:
        rows = ["key,value"]
        for k in sorted(report):
            v = report[k]
            if isinstance(v, (int, float, str, bool)) or v is None:
                rows.append(f"{k},{dumps(v, None).strip()}")
        return "\n".join(rows) + "\n"
    _, pts, w = payload
    pts = np.asarray(pts, dtype=float)
    return points_csv(pts.reshape(len(pts), -1), w)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    a.tol_obj = DEFAULT_TOL if a.tol is None else DEFAULT_TOL.with_(
        **{k: a.tol for k in DEFAULT_TOL.as_dict()})
    try:
        report, payload, code = a.fn(a)
        report = dict(report)
        report["config"] = _config(a)
        text = _csv(payload, report) if a.format == "csv" else dumps(report)
        if a.out:
            Path(a.out).write_text(text)
        else:
            sys.stdout.write(text)
        return code
    except (UsageError, NormgridError, ValueError, OSError, KeyError) as exc:
        print(f"normgrid: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
