"""Acceptance suite: the eight exit criteria, one test each.

Every test prints a [PASS]/[FAIL] line (visible with ``pytest -s`` or in the
failure report) and asserts the criterion at its stated tolerance.
"""

import time

import numpy as np
import pytest

from dampedwave import cli
from dampedwave import convergence as cvg
from dampedwave import dispersion as dsp
from dampedwave import oscillator as osc
from dampedwave import pencil as pv
from dampedwave import quasimodes as qmm


def report(number, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] acceptance criterion {number}: {detail}")
    assert ok, f"criterion {number}: {detail}"


def test_criterion_1_harmonic_oscillator_exactness():
    start = time.perf_counter()
    spectrum = osc.anharmonic_eigenvalues(1, 10, tol=1e-6)
    elapsed = time.perf_counter() - start
    errors = np.abs(spectrum.values - (2.0 * np.arange(11) + 1.0))
    ok = bool(np.all(errors < 1e-6) and elapsed < 30.0)
    report(1, ok,
           f"mu_k(1) = 2k+1 for k<=10: max error {errors.max():.2e} (tol 1e-6), "
           f"runtime {elapsed:.1f}s (< 30s)")


def test_criterion_2_closed_form_reproduction():
    ray = 2.0 ** (1.0 / 3.0) * np.exp(2j * np.pi / 3.0)

    def worst_error(mu_source, tol):
        branches = cli.line_spectrum(1, 0.0, 0.0, 10, mu_source=mu_source, tol=tol)
        worst = 0.0
        for b in branches:
            target = ray * (2.0 * b.k + 1.0) ** (2.0 / 3.0)
            worst = max(worst, abs(b.lam - target))
        assert len(branches) == 11
        return worst

    err_exact = worst_error("exact", 1e-8)
    err_numeric = worst_error("numeric", 1e-6)
    lam0 = cli.line_spectrum(1, 0.0, 0.0, 0, mu_source="exact")[0].lam
    anchor = abs(lam0 - complex(-0.6299605249474366, 1.0911236359717214))
    ok = bool(err_exact < 1e-8 and err_numeric < 1e-5 and anchor < 1e-8)
    report(2, ok,
           f"lambda_k = 2^(1/3) e^(2i pi/3) (2k+1)^(2/3), k<=10: exact-mu error "
           f"{err_exact:.2e} (tol 1e-8), numeric-mu error {err_numeric:.2e} (tol 1e-5), "
           f"lambda_0 anchor {anchor:.2e}")


def test_criterion_3_enclosure_suite():
    violations = 0
    rows_checked = 0
    for n in (1, 2):
        for a0 in (0.0, 3.0):
            for q0 in (0.0, 1.0):
                branches = cli.line_spectrum(n, a0, q0, 4, mu_source="numeric", tol=1e-6)
                export = cli.SpectrumExport(rows=[cli._branch_row(b) for b in branches])
                expanded = export.expanded_rows()
                points = {(r["re_lambda"], r["im_lambda"]) for r in expanded}
                for row in expanded:
                    rows_checked += 1
                    lam = complex(row["re_lambda"], row["im_lambda"])
                    if not (lam.real <= -a0 and abs(lam) ** 2 >= q0):
                        violations += 1
                    if (row["re_lambda"], -row["im_lambda"]) not in points:
                        violations += 1
    ok = violations == 0 and rows_checked > 0
    report(3, ok,
           f"enclosures Re <= -a0, |lambda|^2 >= q0 hold exactly on all "
           f"{rows_checked} exported rows over (n, a0, q0) in {{1,2}}x{{0,3}}x{{0,1}}; "
           f"conjugate-symmetric export verified ({violations} violations)")


def test_criterion_4_independent_verification():
    start = time.perf_counter()
    params = dsp.PencilParams(1, 0.0, 0.0)
    lam0 = 2.0 ** (1.0 / 3.0) * np.exp(2j * np.pi / 3.0)
    lam1 = 2.0 ** (1.0 / 3.0) * 3.0 ** (2.0 / 3.0) * np.exp(2j * np.pi / 3.0)
    grid = pv.assemble(params, L=6.0, N=2400)   # N <= 4000
    rect = pv.ContourSpec(re_min=-2.0, re_max=-0.2, im_min=0.5, im_max=2.8)
    count = pv.count_eigs_contour(grid, rect)
    sigma_ok = True
    detail = []
    for k, lam in enumerate((lam0, lam1)):
        sigma = pv.smallest_singular_value(grid, lam).value
        off = pv.smallest_singular_value(grid, lam + 0.5).value
        threshold = 1e-4 * grid.norm_scale(lam)
        sigma_ok &= sigma < threshold and off > 10.0 * sigma
        detail.append(f"k={k}: sigma={sigma:.2e} < {threshold:.2e}, off/on={off / sigma:.1f}x")
    elapsed = time.perf_counter() - start
    ok = bool(count == 2 and sigma_ok and elapsed < 120.0)
    report(4, ok,
           f"contour count {count} (expect 2); {'; '.join(detail)}; "
           f"runtime {elapsed:.1f}s (< 2min, N=2400)")


def test_criterion_5_essential_spectrum_suite():
    a = qmm.damping_monomial(1)
    q = qmm.constant_potential(0.0)
    ok = True
    details = []
    for lam in (-0.1, -1.0, -5.0):
        rows = qmm.decay_experiment(lam, a, q, [10, 20, 40, 80])
        ratios = [r["ratio"] for r in rows]
        decreasing = all(x > y for x, y in zip(ratios, ratios[1:]))
        final_small = ratios[-1] < 0.05
        ok &= decreasing and final_small
        details.append(f"lam={lam}: ratios {[f'{r:.3f}' for r in ratios]}")
    cone_rows = qmm.cone_decay_experiment(qmm.constant_potential(0.0), [10, 20, 40, 80])
    slope = qmm.loglog_slope([r["m"] for r in cone_rows], [r["ratio"] for r in cone_rows])
    cone_ok = abs(slope - (-0.5)) <= 0.15
    ok = bool(ok and cone_ok)
    report(5, ok,
           "; ".join(details) + f"; cone slope {slope:.3f} (-0.5 +- 0.15)")


def test_criterion_6_convergence_experiment():
    table = cvg.lambda_branch([1, 2, 3, 4, 6, 8], k=1, a0=0.0, q0=0.0, tol=1e-8)
    errors = table.errors
    decreasing_ok, _ = cvg.verify_exactness(table, window=3)
    final_min = errors[-1] == min(errors)
    gap_ok = True
    worst_gap = 0.0
    for row in table.rows:
        gap = abs((np.angle(row.lam) - np.pi / 2) - cvg.angular_gap(row.n))
        worst_gap = max(worst_gap, gap)
        gap_ok &= gap < 1e-6
    ok = bool(decreasing_ok and final_min and gap_ok)
    report(6, ok,
           f"errors |lambda_1(n) - i pi/2| = {[f'{e:.3f}' for e in errors]} "
           f"eventually decrease with final minimum; angular gap matches "
           f"pi/(2(2n+1)) within {worst_gap:.1e} (tol 1e-6)")


def test_criterion_7_strip_trend():
    params = dsp.StripParams(1.0, 1.0, 0.0)
    reals = []
    for j in range(1, 21):
        rs = dsp.roots_all(dsp.strip_char_poly(params, j, 0))
        branches = dsp.physical_roots(rs, params, mu=1.0, k=0, j=j)
        reals.append(max(branches, key=lambda b: b.lam.imag).lam.real)
    increasing = all(a < b for a, b in zip(reals, reals[1:]))
    bounded = all(r <= -1.0 for r in reals)
    close = abs(reals[-1] - (-1.0)) < 0.1
    ok = bool(increasing and bounded and close)
    report(7, ok,
           f"Re lambda_j0 increases over j=1..20, stays <= -1, ends at "
           f"{reals[-1]:.4f} (within 0.1 of -1)")


def test_criterion_8_determinism(tmp_path):
    commands = {
        "spectrum-line": ["spectrum-line", "--n", "1", "--k-max", "10", "--mu", "exact"],
        "figure": ["figure", "fig-strip"],
        "essential": ["essential", "--cone", "--q", "zero", "--m", "10,20"],
    }
    ok = True
    for name, argv in commands.items():
        out1 = tmp_path / f"{name}_1.json"
        out2 = tmp_path / f"{name}_2.json"
        assert cli.main(argv + ["--out", str(out1)]) == 0
        assert cli.main(argv + ["--out", str(out2)]) == 0
        ok &= out1.read_bytes() == out2.read_bytes()
    report(8, bool(ok), "repeated runs produce byte-identical data files "
                        f"({', '.join(commands)})")
