"""Acceptance gate: one PASS/FAIL line per criterion, shown in the terminal summary."""
import math
import re
import time

import numpy as np
import pytest

from kblab import checks
from kblab.bl_core import BLDatum, TruncationWindow, axes_datum, bl_gaussian, bl_truncated_estimate, lines_datum, lw_constant
from kblab.cli import main
from kblab.fremlin import NonnegTensor, fremlin_bruteforce, fremlin_norm
from kblab.harness import grid_lines, incidence_matrix, lw_kakeya, random_lines, DyadicGrid
from kblab.polysurf import build_p0


def _all_pass(rows):
    rows = list(rows)
    bad = [r for r in rows if not r.passed]
    return not bad, rows, bad


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def test_scaling_identity(verdict):
    t = time.time()
    ok, rows, bad = _all_pass(checks.scaling_rows(20))
    worst = max(r.observed for r in rows)
    ok = verdict("1 scaling identity on 20 random data", ok and len(rows) == 20 and time.time() - t < 60,
                 f"max rel err {worst:.2e}")
    assert ok, bad


def test_exponent_recovery(verdict):
    point = BLDatum(1, (np.zeros((0, 1)),), (0.5,))
    Rs = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
    est = [bl_truncated_estimate(point, TruncationWindow(1.0, R)).value for R in Rs]
    oracle = [math.sqrt(2 * R) for R in Rs]
    fit_R = _slope(Rs, est)
    a = verdict("2a slope vs log R for p=1/2", abs(fit_R - 0.5) <= 0.05 and abs(_slope(Rs, oracle) - 0.5) < 1e-12
                and np.allclose(est, oracle, rtol=0.05), f"fitted {fit_R:.4f}")

    sq = BLDatum(1, (np.zeros((0, 1)),), (2.0,))
    rs = [1 / 2 ** k for k in range(7)]
    est = [bl_truncated_estimate(sq, TruncationWindow(r, 1.0 + 1e-12)).value for r in rs]
    fit_r = -_slope(rs, est)
    b = verdict("2b slope vs log(1/r) for p=2", abs(fit_r - 1.0) <= 0.05 and np.allclose(est, [1 / r for r in rs], rtol=0.05),
                f"fitted {fit_r:.4f}")

    lw = axes_datum(2)
    est_R = [bl_truncated_estimate(lw, TruncationWindow(1.0, R)).value for R in Rs]
    est_r = [bl_truncated_estimate(lw, TruncationWindow(r, 2.0)).value for r in rs]
    sR, sr = _slope(Rs, est_R), _slope(rs, est_r)
    c = verdict("2c LW axes exponents", abs(sR) <= 0.05 and abs(sr) <= 0.05, f"fitted {sR:.4f}, {sr:.4f}")
    assert a and b and c


def test_kappa_arithmetic(verdict):
    ok, rows, bad = _all_pass(r for r in checks.bl_suite(50) if not r.case.startswith("lw-"))
    ok = verdict("3 kappa + kappa_tilde identity and signs on 50 lattice data", ok and len(rows) == 150)
    assert ok, bad


def test_loomis_whitney_angles(verdict):
    errs = []
    for th in (math.pi / 2, math.pi / 3, math.pi / 4, math.pi / 6):
        d = lines_datum(th)
        exact = 1 / math.sin(th)
        errs.append(max(abs(bl_gaussian(d).value - exact), abs(lw_constant(d) - exact)))
    ok = verdict("4 Gaussian BL at four angles vs 1/sin", max(errs) <= 1e-4, f"max err {max(errs):.2e}")
    assert ok


def test_fremlin(verdict):
    I2 = NonnegTensor(np.eye(2))
    ident, brute = fremlin_norm(I2, [2, 2]).value, fremlin_bruteforce(I2, [2, 2])
    a = verdict("5a identity 2x2 vs brute force", abs(ident - brute) <= 1e-6 and abs(ident - 2) <= 1e-6,
                f"{ident!r} vs {brute!r}")
    diag = fremlin_norm(NonnegTensor(np.diag([1.0, 4.0])), [2, 2]).value
    b = verdict("5b diag(1,4)", abs(diag - 5) <= 0.1, f"{diag!r}")
    rows = list(checks.fremlin_suite(100))
    lower = [r for r in rows if r.case.startswith("lm-lower")]
    rank1 = [r for r in rows if r.case.startswith("rank-one")]
    c = verdict("5c lower bound on 100 random tensors", len(lower) == 100 and all(r.passed for r in lower))
    d = verdict("5d rank-one cross norm", all(r.passed for r in rank1),
                f"max rel err {max(abs(r.observed - r.target) / r.target for r in rank1):.1e}")
    assert a and b and c and d


def test_endpoint_kakeya(verdict):
    t = time.time()
    N = 8
    rep = lw_kakeya(grid_lines(N), N)
    # independent count: every cube meets exactly one line of each family
    M = [incidence_matrix(f, DyadicGrid(2, N)) for f in grid_lines(N)]
    counted = float(sum(M[0][c].sum() * M[1][c].sum() for c in range(len(M[0]))))
    a = verdict("6a grid-lines ratio", abs(rep.ratio - 1) <= 0.1 and rep.lhs == counted, f"ratio {rep.ratio!r}")
    means = []
    for size in (10, 40, 160):
        ratios = [lw_kakeya([random_lines(size, 16.0, rng), random_lines(size, 16.0, rng)], 16.0).ratio
                  for rng in (np.random.default_rng([0, size, s]) for s in range(4))]
        means.append(float(np.mean(ratios)))
    drift = max(means) / min(means) - 1
    b = verdict("6b random-line sweep drift", drift <= 0.2 and time.time() - t < 600,
                "means " + ", ".join(f"{m:.3f}" for m in means))
    assert a and b


def test_bezout_crofton(verdict):
    bez = list(checks.bezout_rows(20, lines=25))
    a = verdict("7a root counts <= degree on 500 lines / 20 polynomials", len(bez) == 20 and all(r.passed for r in bez))
    cro = list(checks.crofton_rows(20))
    b = verdict("7b directional area vs Crofton within 3%", all(r.passed for r in cro),
                f"max rel err {max(abs(r.observed / r.target - 1) for r in cro):.4f}")
    cir = list(checks.circle_rows())
    c = verdict("7c circle anchor 4 rho within 2%", all(r.passed for r in cir),
                f"max rel err {max(abs(r.observed / r.target - 1) for r in cir):.4f}")
    assert a and b and c


def test_convex_geometry(verdict):
    john = list(checks.john_rows(50))
    a = verdict("8a John sandwich on 50 polytopes", len(john) == 100 and all(r.passed for r in john))
    sl = list(checks.slice_rows(200))
    b = verdict("8b slice/projection on 200 pairs", all(r.passed for r in sl))
    wv = list(checks.wedge_visibility_rows(50))
    c = verdict("8c wedge-visibility product floor 0.1 on 50 measures", all(r.passed for r in wv),
                f"min {min(r.observed for r in wv):.3f}")
    l1 = [r for r in checks.geometry_suite(1) if r.case == "l1-visibility"]
    d = verdict("8d l1-ball visibility 1/2", len(l1) == 1 and l1[0].passed, f"{l1[0].observed:.4f}")
    assert a and b and c and d


def test_duality(verdict):
    rows = list(checks.harness_suite(200))
    dual = [r for r in rows if r.case.startswith("duality")]
    names = {r.case for r in dual}
    ok = verdict("9 duality both directions at 1e-9", all(r.passed for r in dual)
                 and {"duality-single-cube", "duality-equal-weights"} <= names,
                 f"{len(dual) // 2} instances, max violation {max(r.observed for r in dual if r.relation == 'le'):.1e}")
    assert ok


def test_p0_construction(verdict):
    a = verdict("10a p0 degree for n=2, R=1", build_p0(1, 2).degree == 8)
    rows = list(checks.p0_rows(range(1, 9), directions=360, floor=0.5))
    b = verdict("10b p0 seminorm >= 0.5 for R <= 8", all(r.passed for r in rows),
                f"min {min(r.observed for r in rows):.3f}")
    assert a and b


@pytest.mark.slow
def test_cli_determinism(verdict, tmp_path, capsys):
    commands = ["exponents", "kakeya", "fremlin", "geometry-checks", "polysurf-checks", "duality", "proptest"]
    same = {}
    for cmd in commands:
        outs = []
        for i in range(2):
            d = tmp_path / f"{cmd}-{i}"
            main([cmd, "--out", str(d), "--seed", "7"])
            capsys.readouterr()
            outs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())})
        same[cmd] = outs[0] == outs[1] and bool(outs[0])
    ok = verdict("11 byte-identical reruns of every subcommand", all(same.values()),
                 ", ".join(c for c, s in same.items() if not s))
    assert ok
