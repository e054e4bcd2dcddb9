"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the summary section
lists the lines) or as a script, ``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from corpus import exact_rule_corpus
from normgrid.certify import certify_l2, certify_linfty, linfty_from_l2, nikolskii_constant
from normgrid.cli import main as cli_main
from normgrid.exact import (WeightedRule, exact_weighted_discretization, lift_size,
                            lq_power_integral, moment_residual, satisfies_node_count_law,
                            tchakaloff_compress, tchakaloff_probability)
from normgrid.extremal import uniform_weight_witness, sidon_report
from normgrid.greedy import oga_exact_l2, rga_bound, rga_equal_weight
from normgrid.hypercross import HypercrossSetParams, build_w, hyperbolic_system, verify_w
from normgrid.spaces import (TWO_PI, PointSet, build_box, canonical_grid, explicit_set,
                             torus_grid, trig_span,
                             trig_system)
from normgrid.universal import (NetParams, build_hammersley_net, certify_universal,
                                dispersion, dispersion_bruteforce,
                                dispersion_implies_universal_check, dyadic_collection,
                                verify_net)


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# -- criterion bodies: each returns (ok, detail) --------------------------------

def grid_exactness():
    def run():
        rng = np.random.default_rng(1)
        worst, count = 0.0, 0
        for d in (1, 2, 3):
            for N in np.ndindex(*([4] * d)):
                K = np.array(build_box(N).freqs, dtype=float)
                E = np.exp(1j * canonical_grid(N).points @ K.T)
                C = rng.standard_normal((100, len(K))) + 1j * rng.standard_normal((100, len(K)))
                exact = np.sum(np.abs(C) ** 2, axis=1)
                disc = np.mean(np.abs(E @ C.T) ** 2, axis=0)
                worst = max(worst, float(np.max(np.abs(disc - exact) / exact)))
                count += len(C)
        return worst, count
    (worst, count), secs = timed(run)
    return worst <= 1e-10 and secs < 5, f"max rel err {worst:.2e} over {count} polynomials, {secs:.1f}s"


def even_q_weighted():
    spaces = [trig_span(0, "const"), trig_span(1, "sincos"), trig_system(build_box([1])),
              trig_span(3, "cos"), trig_span(2, "sin")]

    def run():
        worst, sizes_ok = 0.0, True
        for s in spaces:
            for q in (2, 4):
                rule = exact_weighted_discretization(s, q)
                sizes_ok &= len(rule) <= lift_size(s.n_funcs, q)
                C = np.random.default_rng(q).standard_normal((100, s.n_funcs))
                ref = lq_power_integral(s, C, q, 64)
                got = rule.weights @ (s(rule.points) @ C.T) ** q
                worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))
        return worst, sizes_ok
    (worst, sizes_ok), secs = timed(run)
    return (worst <= 1e-7 and sizes_ok and secs < 30,
            f"max rel err {worst:.2e}, node bound held: {sizes_ok}, {secs:.1f}s")


def tchakaloff():
    spaces = [trig_span(0, "const"), trig_span(1, "cos"), trig_span(1, "sincos"),
              trig_system(build_box([1])), trig_span(3, "cos"), trig_system(build_box([2])),
              trig_span(3, "sincos"), trig_span(5, "cos"), trig_system(explicit_set([(0,), (1,), (3,)]))]

    def run():
        bad = []
        for s in spaces:
            r = tchakaloff_compress(s)
            if not (len(r) <= s.n_funcs and r.weights.min(initial=0.0) >= -1e-12
                    and moment_residual(s, r) <= 1e-8):
                bad.append((s.meta, "plain"))
            p = tchakaloff_probability(s)
            if not (len(p) <= s.n_funcs + 1 and p.weights.min(initial=0.0) >= -1e-12
                    and abs(math.fsum(p.weights) - 1) <= 1e-10 and moment_residual(s, p) <= 1e-8):
                bad.append((s.meta, "probability"))
        return bad
    bad, secs = timed(run)
    return not bad and secs < 10, f"{len(spaces)} spans, violations {bad}, {secs:.1f}s"


def rga_guarantee():
    s = trig_system(build_box([2]))
    res, secs = timed(lambda: rga_equal_weight(s, torus_grid([101]), 1000, t=1.0))
    viol = sum(e > rga_bound(k) for k, e in enumerate(res.residual_norms, start=1))
    return viol == 0 and secs < 60, f"N={s.n_funcs}, m<=1000, violations {viol}, {secs:.1f}s"


def oga_exactness():
    spaces = [trig_span(0, "const", True), trig_span(1, "sincos", True),
              trig_system(build_box([1])), trig_span(3, "cos", True),
              trig_system(build_box([2])), trig_span(3, "sincos", True)]
    worst_iter, worst_c = 0.0, 0.0
    for s in spaces:
        N = s.n_funcs
        res = oga_exact_l2(s, torus_grid([8 * (2 * s.degree[0] + 1)]), max_iter=N * (N + 1) // 2)
        c = certify_l2(s, res.rule)
        worst_iter = max(worst_iter, res.iterations / (N * (N + 1) / 2))
        worst_c = max(worst_c, abs(c.C1 - 1), abs(c.C2 - 1))
    return (worst_iter <= 1 and worst_c <= 1e-6,
            f"max iterations/(N(N+1)/2) {worst_iter:.2f}, max |C-1| {worst_c:.1e}")


def node_count_law():
    corpus = exact_rule_corpus()
    viol = [(N, name) for N, name, rule in corpus if not satisfies_node_count_law(rule, N)]
    return not viol, f"{len(corpus)} rules, violations {viol}"


def witness():
    out = []
    ok = True
    for q, M in ((2, 3), (4, 5)):
        w = uniform_weight_witness(2, q)
        ok &= (w.M == M and w.residual <= 1e-9 and w.extra["unique"]
               and float(np.max(np.abs(w.weights - 1 / M))) <= 1e-9)
        out.append(f"q={q}: M={w.M}, residual {w.residual:.1e}")
    return ok, "; ".join(out)


def dispersion_oracle():
    def run():
        rng = np.random.default_rng(8)
        bad, dims = 0, []
        for i in range(50):
            d = i % 3 + 1
            n = int(rng.integers(0, 65))
            T = rng.random((n, d))
            if i % 5 == 0:  # shared coordinates exercise ties
                T = np.floor(T * 6) / 6
            bad += dispersion(T) != dispersion_bruteforce(T)
        return bad
    bad, secs = timed(run)
    return bad == 0 and secs < 60, f"50 sets, mismatches {bad}, {secs:.1f}s"


def nets():
    failed = [r for r in range(13) if not verify_net(build_hammersley_net(r), NetParams(0, r, 2))[0]]
    P = build_hammersley_net(6).points.copy()
    P[5, 1] = (P[5, 1] + 0.5) % 1.0
    ok, box = verify_net(P, NetParams(0, 6, 2))
    return (not failed and not ok and box is not None,
            f"failed r {failed}; perturbed set box shape {box and box['shape']} "
            f"count {box and box['count']} expected {box and box['expected']}")


def sidon():
    def run():
        return [N for N in range(1, 51)
                if not (lambda r: r["size_ok"] and r["coverage_ok"])(sidon_report(N))]
    bad, secs = timed(run)
    return not bad and secs < 5, f"N<=50 failures {bad}, {secs:.1f}s"


def hypercross():
    parts, ok = [], True
    for N in (4, 8):
        W = build_w(HypercrossSetParams(N, 2))
        M = W.meta["M_sequence"]["2"]
        size_ok = len(W.points) <= 8 * M * W.meta["sizes"]["1"]
        s = hyperbolic_system(N, 2)
        vals = [verify_w(s, W.points, mode="probe", seed=k, trials=100)["C_hat"] for k in range(5)]
        mean = float(np.mean(vals))
        stable = all(math.isfinite(v) and abs(v - mean) <= 0.25 * mean for v in vals)
        ok &= size_ok and stable
        parts.append(f"N={N}: |W|={len(W.points)} M={M} C_hat {min(vals):.2f}..{max(vals):.2f}")
    s1 = hyperbolic_system(4, 1)
    r1 = verify_w(s1, torus_grid([16]), mode="exact")["C_hat"]
    ok &= r1 <= 3
    parts.append(f"d=1 ratio {r1:.3f}")
    return ok, "; ".join(parts)


def linf_from_l2():
    rng = np.random.default_rng(12)
    worst_gap, count = -math.inf, 0
    spaces = [trig_system(build_box([1])), trig_system(build_box([2])), trig_system(build_box([4])),
              trig_system(build_box([1, 1])), trig_system(explicit_set([(0,), (1,), (3,)]), real=False)]
    while count < 20:
        s = spaces[count % len(spaces)]
        m = int(rng.integers(s.n_funcs + 1, 3 * s.n_funcs + 2))
        pts = PointSet(s.dim, rng.random((m, s.dim)) * TWO_PI, "torus")
        w = rng.random(m) + 0.2
        rule = WeightedRule(pts, w / w.sum(), ("positive", "probability"))
        c = certify_l2(s, rule)
        if c.C1 <= 0:
            continue
        ratio, _ = certify_linfty(s, pts, 4)
        bound = linfty_from_l2(c, nikolskii_constant(s))
        assert bound == pytest.approx(math.sqrt(s.n_funcs / c.C1))
        worst_gap = max(worst_gap, ratio - (bound + 1e-6))
        count += 1
    return worst_gap <= 0, f"20 rules, max(ratio - bound) {worst_gap + 1e-6:.3f}"


def universal():
    rep = certify_universal(dyadic_collection(3, 2), torus_grid([16, 16]), 2)
    grid_ok = abs(rep["worst_C1"] - 1) <= 1e-10 and abs(rep["worst_C2"] - 1) <= 1e-10
    ham = dispersion_implies_universal_check(build_hammersley_net(6), c_max=3)
    ok = grid_ok and ham["smallest_c"] is not None
    return ok, (f"grid C1 {rep['worst_C1']:.12f} C2 {rep['worst_C2']:.12f}; "
                f"Hammersley r=6 finite ratio at c={ham['smallest_c']}")


CLI_RUNS = [
    ["hypercross", "verify", "--N", "4", "--d", "2", "--C0", "2.9"],
    ["certify", "linf", "--space", "box:2,1", "--points", "random:20"],
    ["certify", "l1", "--space", "box:2", "--points", "random:12"],
    ["random", "subset", "--space", "box:2", "--domain", "grid:40", "--m", "12", "--trials", "10"],
    ["universal", "collection", "--n", "2", "--q", "inf", "--r", "5"],
    ["extremal", "lacunary", "--N-values", "4"],
    ["greedy", "oga", "--space", "box:2"],
]


def determinism(tmp):
    diffs, errors = [], []
    for k, argv in enumerate(CLI_RUNS):
        texts = []
        for threads in (1, 2, 4):
            out = tmp / f"run{k}_{threads}.json"
            code = cli_main(argv + ["--seed", "5", "--threads", str(threads), "--out", str(out)])
            if code != 0 or not out.exists():
                errors.append(" ".join(argv[:2]))
                break
            texts.append(out.read_bytes())
        if len(set(texts)) > 1:
            diffs.append(" ".join(argv[:2]))
    return (not diffs and not errors,
            f"{len(CLI_RUNS)} commands x threads 1,2,4; differing {diffs}; errors {errors}")


CRITERIA = [
    (1, "grid exactness", grid_exactness),
    (2, "exact weighted even-q rule", even_q_weighted),
    (3, "Tchakaloff compression", tchakaloff),
    (4, "relaxed greedy guarantee", rga_guarantee),
    (5, "orthogonal greedy exactness", oga_exactness),
    (6, "node-count law", node_count_law),
    (7, "uniform-weight witness", witness),
    (8, "dispersion oracle equivalence", dispersion_oracle),
    (9, "net verification", nets),
    (10, "difference-covering set", sidon),
    (11, "hyperbolic cross norming set", hypercross),
    (12, "L-infinity from L2 bound", linf_from_l2),
    (13, "universal collection", universal),
    (14, "CLI determinism across threads", None),
]


@pytest.mark.parametrize("number,title,body", [c for c in CRITERIA if c[2] is not None],
                         ids=[f"c{c[0]:02d}" for c in CRITERIA if c[2] is not None])
def test_criterion(number, title, body, acceptance_record):
    ok, detail = body()
    acceptance_record(number, title, ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} {number:2d} {title}: {detail}")
    assert ok, detail


def test_criterion_c14(tmp_path, acceptance_record):
    ok, detail = determinism(tmp_path)
    acceptance_record(14, CRITERIA[13][1], ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} 14 {CRITERIA[13][1]}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failures = 0
    for number, title, body in CRITERIA:
        if body is None:
            with tempfile.TemporaryDirectory() as d:
                ok, detail = determinism(Path(d))
        else:
            ok, detail = body()
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} {number:2d} {title}: {detail}", flush=True)
    sys.exit(1 if failures else 0)
