"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one ``PASS``/``FAIL`` line (echoed in the pytest summary
and printed when the module is run as a script) before asserting.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from hexaspec.edge import (WRONSKIAN_FORM, dirichlet_spectrum_scan, g_symmetry_residuals,
                           monodromy, phi_basis, phi_symmetry_residuals,
                           relative_dirichlet_indicator)
from hexaspec.graphene import (dirac_scan, dispersion_residual, fermi_classify_many,
                               loop_state_residual, s0, s0_norm, second_order_residual,
                               solve_sheets_many, theta_grid)
from hexaspec.lyapunov import real_line_band_structure
from hexaspec.oracles import free_monodromy
from hexaspec.ode import integrate_monodromy
from hexaspec.perturbation import (PerturbationConfig, assemble_m_eps, det_expansion,
                                   dirac_persistence_check, exact_perturbed_roots,
                                   locate_conical_point, re_s0_s1, s1)
from hexaspec.potential import FREE, build_potential

from conftest import ACCEPTANCE, GENERIC

P4 = math.pi ** 4


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def random_potential(rng):
    return build_potential(rng.uniform(-5.0, 5.0, rng.integers(1, 4)))


def test_01_free_monodromy():
    lams = [0.5, 1.0, 10.0, 100.0, 400.0]
    t = time.perf_counter()
    M, _, _ = integrate_monodromy(FREE, lams, rtol=1e-12)
    dt = time.perf_counter() - t
    err = max(np.abs(m - free_monodromy(x)).max() for m, x in zip(M, lams))
    report(1, err < 1e-8 and dt < 1.0, f"max entry error {err:.2e} (< 1e-8), {dt:.2f} s (< 1 s)")


def test_02_symplectic_unimodular():
    rng = np.random.default_rng(2)
    t = time.perf_counter()
    ws = wd = 0.0
    for _ in range(100):
        M = monodromy(random_potential(rng), rng.uniform(-50.0, 500.0))
        ws = max(ws, np.abs(M.T @ WRONSKIAN_FORM @ M - WRONSKIAN_FORM).max())
        wd = max(wd, abs(np.linalg.det(M) - 1.0))
    dt = time.perf_counter() - t
    report(2, ws < 1e-8 and wd < 1e-9 and dt < 10.0,
           f"max |M^T J M - J| {ws:.2e} (< 1e-8), max |det M - 1| {wd:.2e} (< 1e-9), {dt:.2f} s")


def test_03_identity_suite():
    rng = np.random.default_rng(3)
    t = time.perf_counter()
    worst, n = 0.0, 0
    while n < 20:
        q, lam = random_potential(rng), rng.uniform(-50.0, 500.0)
        M = monodromy(q, lam, 1e-12)
        if relative_dirichlet_indicator(M) <= 1e-3:
            continue
        n += 1
        res = list(phi_symmetry_residuals(phi_basis(q, lam, 1e-12)).values())
        res += list(g_symmetry_residuals(M).values())
        worst = max(worst, max(abs(r) for r in res))
    dt = time.perf_counter() - t
    report(3, worst < 1e-9 and dt < 10.0, f"max identity residual {worst:.2e} (< 1e-9), {dt:.2f} s")


def _closed_form_sheets(c, hi):
    mu_max = hi ** 0.25
    a = math.acos(c)
    mus = [m for m in (a, math.pi - a, math.pi + a) if m <= mu_max]
    if c == 1.0:
        mus.append(0.0)
    return sorted({round(m ** 4, 9) for m in mus})


def test_04_free_dispersion():
    t = time.perf_counter()
    th = theta_grid(61)
    T = np.stack(np.meshgrid(th, th, indexing="ij"), -1).reshape(-1, 2)
    sheets = solve_sheets_many(FREE, T, (0.0, 300.0), 1200, root_tol=1e-12)
    worst, missing = 0.0, 0
    for theta, rows in zip(T, sheets):
        found = sorted({s.lam for s in rows})
        ref = _closed_form_sheets(min(1.0, s0_norm(theta) / 3.0), 300.0)
        # every closed-form energy is found, and every found energy is closed-form
        for x in ref:
            d = min((abs(x - y) for y in found), default=math.inf)
            missing += d > 1e-8 * max(1.0, x)
        for y in found:
            worst = max(worst, min(abs(x - y) for x in ref) / max(1.0, y))
            if abs(y - P4) > 1e-6 and y > 0:
                r = dispersion_residual(FREE, y, theta)
                worst = max(worst, 0.0 if abs(r) < 1e-7 else abs(r))
    dt = time.perf_counter() - t
    report(4, worst < 1e-8 and missing == 0 and dt < 60.0,
           f"{len(T)} quasimomenta, max relative mismatch {worst:.2e} (< 1e-8), "
           f"{missing} closed-form roots missed, {dt:.1f} s (< 60 s)")


def test_05_dirac_points():
    t = time.perf_counter()
    pts = dirac_scan(FREE, (0.0, 600.0), 1200)
    dt = time.perf_counter() - t
    want = [(math.pi / 2) ** 4, (3 * math.pi / 2) ** 4]
    ok = len(pts) == 2 and dt < 10.0
    rel = [abs(p.lambda_star - w) / w for p, w in zip(pts, want)]
    s0max = max(s0_norm(th) for p in pts for th in p.theta_stars) if pts else math.inf
    ok = ok and max(rel) < 1e-6 and s0max < 1e-12
    ok = ok and all(p.cone_type == "two-cone" for p in pts)
    star = pts[0].theta_star if pts else None
    ok = ok and star is not None and abs(star.theta1 - 2 * math.pi / 3) < 1e-15 \
        and abs(star.theta2 + 2 * math.pi / 3) < 1e-15
    report(5, ok, f"lambda* rel errors {[f'{r:.1e}' for r in rel]} (< 1e-6), |s0(theta*)| "
                  f"{s0max:.1e} (< 1e-12), cones {[p.cone_type for p in pts]}, {dt:.2f} s")


def test_06_flat_bands():
    roots = dirichlet_spectrum_scan(FREE, 2000.0, 2000)
    want = [P4, 16 * P4]
    ok = len(roots) == 2
    rel = [abs(r - w) / w for r, w in zip(roots, want)]
    res = [loop_state_residual(FREE, r) for r in roots]
    ok = ok and max(rel) < 1e-8 and max(res) < 1e-8
    report(6, ok, f"Sigma^D rel errors {[f'{r:.1e}' for r in rel]} (< 1e-8), "
                  f"loop-state residuals {[f'{r:.1e}' for r in res]} (< 1e-8)")


def _runs(mask):
    out, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        if not m and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


def test_07_fermi_classification():
    free_ok = fermi_classify_many(FREE, [0.0])[0].cls == "reducible"
    samples = np.linspace(10.0, 1000.0, 100)
    free_ok &= all(f.cls == "irreducible" for f in fermi_classify_many(FREE, samples))

    q = build_potential([10.0])
    lams = np.linspace(-50.0, 1000.0, 2101)
    cls = [f.cls for f in fermi_classify_many(q, lams)]
    gaps = real_line_band_structure(q, (-50.0, 1000.0), 2000).gaps
    step = lams[1] - lams[0]
    matched = 0
    for i, j in _runs([c == "absent" for c in cls]):
        lo, hi = lams[i], lams[j]
        for a, b in gaps:
            if a - step <= lo and hi <= b + step and lo - a < 2 * step and b - hi < 2 * step:
                matched += 1
    report(7, free_ok and matched >= 1,
           f"free: reducible at 0 and irreducible at 100 points = {free_ok}; "
           f"a1 = 10: {matched} absent windows coincide with band-scan gaps {gaps}")


def test_08_perturbation_order():
    rng = np.random.default_rng(8)
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    slopes, logs, d1err, n = [], [], 0.0, 0
    while n < 50:
        lam, th, c1 = rng.uniform(-50.0, 500.0), rng.uniform(-np.pi, np.pi, 2), rng.uniform(-1, 1)
        if relative_dirichlet_indicator(monodromy(GENERIC, lam, 1e-12)) <= 1e-3:
            continue
        n += 1
        cfg = PerturbationConfig(0.0, c1)
        d0, d1 = det_expansion(GENERIC, lam, th, cfg, 1e-12)
        err = [abs(assemble_m_eps(GENERIC, lam, th, cfg.with_epsilon(e), 1e-12)[1] - d0 - e * d1)
               for e in eps]
        logs.append(np.log(err))
        slopes.append(np.polyfit(np.log(eps), np.log(err), 1)[0])
        h = 1e-4
        fd = (assemble_m_eps(GENERIC, lam, th, cfg.with_epsilon(h), 1e-12)[1].real
              - assemble_m_eps(GENERIC, lam, th, cfg.with_epsilon(-h), 1e-12)[1].real) / (2 * h)
        d1err = max(d1err, abs(fd - d1) / abs(d1))
    pooled = np.polyfit(np.log(eps), np.mean(logs, axis=0), 1)[0]
    ok = all(1.8 <= s <= 2.2 for s in slopes) and d1err < 1e-5
    report(8, ok, f"per-sample slopes in [{min(slopes):.3f}, {max(slopes):.3f}] (in [1.8, 2.2]), "
                  f"pooled slope {pooled:.4f}, max d1 central-difference error {d1err:.1e} (< 1e-5)")


def test_09_dirac_persistence():
    cfg = PerturbationConfig(0.02, 0.5)
    dirac = dirac_scan(FREE, (0.0, 100.0), 400)[0]
    radii = (0.04, 0.02, 0.01)
    rep = dirac_persistence_check(FREE, cfg, dirac, radii=radii, n_angles=24)
    slope = np.polyfit(np.log(radii), np.log(rep.separations), 1)[0]
    ok = rep.crossing_offset < 1e-3 and 0.8 <= slope <= 1.2
    detail = (f"roots at theta* {[round(r, 6) for r in rep.roots_at_theta_star]}, offset from "
              f"lambda* {rep.crossing_offset:.3e} (< 1e-3); separations {rep.separations} on "
              f"radii {radii}, log-log slope {slope:.2f} (in [0.8, 1.2])")
    if not ok:
        # where the cone went: the sheets touch at a shifted quasimomentum
        center, sep, _ = locate_conical_point(FREE, cfg, dirac)
        moved = dirac_persistence_check(FREE, cfg, dirac, radii=radii, n_angles=24,
                                        center=center)
        shift = center - dirac.theta_star.as_array()
        mslope = np.polyfit(np.log(radii), np.log(moved.separations), 1)[0]
        detail += (f" | cone found at theta* + ({shift[0]:.4f}, {shift[1]:.4f}) with touching gap "
                   f"{sep:.1e}; separations there {tuple(round(s, 4) for s in moved.separations)}, "
                   f"slope {mslope:.2f}")
    report(9, ok, detail)


def test_10_re_s0_s1():
    g = np.linspace(-np.pi, np.pi, 201)
    T = np.stack(np.meshgrid(g, g, indexing="ij"), -1)
    worst_bound = worst_period = worst_zero = worst_direct = 0.0
    bound_ok = True
    for c1 in (-1.0, -0.5, 0.0, 0.5, 1.0):
        cfg = PerturbationConfig(0.0, c1)
        R = re_s0_s1(T, cfg)
        bound_ok &= bool(np.all(np.abs(R) <= 2 * (1 + abs(c1))))
        worst_bound = max(worst_bound, np.abs(R).max() / (2 * (1 + abs(c1))))
        direct = (s0(T) * np.conj(s1(T, cfg))).real
        worst_direct = max(worst_direct, np.abs(R - direct).max())
        for shift in ((2 * np.pi, 0.0), (0.0, 2 * np.pi), (2 * np.pi, -2 * np.pi)):
            worst_period = max(worst_period, np.abs(re_s0_s1(T + shift, cfg) - R).max())
        for th in ((0.0, 0.0), (2 * np.pi / 3, -2 * np.pi / 3), (-2 * np.pi / 3, 2 * np.pi / 3)):
            worst_zero = max(worst_zero, abs(re_s0_s1(th, cfg)))
    ok = bound_ok and worst_period < 1e-12 and worst_zero < 1e-12 and worst_direct < 1e-12
    report(10, ok, f"max |R| / 2(1+|c1|) = {worst_bound:.3f} (<= 1), periodicity {worst_period:.1e}, "
                   f"zeros {worst_zero:.1e}, closed form vs complex product {worst_direct:.1e} "
                   f"(all < 1e-12)")


def test_11_second_order_correspondence():
    rng = np.random.default_rng(11)
    cfg = PerturbationConfig(0.0, 0.0)
    hi = 600.0
    worst, missing, count = 0.0, 0, 0
    for th in rng.uniform(-np.pi, np.pi, (50, 2)):
        roots = exact_perturbed_roots(FREE, th, cfg, (1e-6, hi), 1200, root_tol=1e-12)
        c = s0_norm(th) / 3.0
        for lam in roots:
            count += 1
            worst = max(worst, abs(second_order_residual(math.sqrt(lam), th)))
        # second-order roots cos(sqrt Lam) = +-c, mapped back by lam = Lam^2
        a = math.acos(c)
        second = [m ** 4 for m in (a, math.pi - a, math.pi + a) if m ** 4 <= hi]
        for x in second:
            missing += min((abs(x - y) for y in roots), default=math.inf) > 1e-8 * x
    report(11, worst < 1e-8 and missing == 0 and count >= 50,
           f"{count} fourth-order roots at 50 quasimomenta, max second-order residual at "
           f"lam^(1/2) {worst:.1e} (< 1e-8), {missing} second-order roots unmatched")


SMALL = {"potential": {"cosine": [1.3, -0.7]},
         "lambda": {"min": -10.0, "max": 60.0, "grid": 300}, "theta": {"grid": 9},
         "perturbation": {"epsilon": 0.02, "c1": 0.5}}


def test_12_determinism(tmp_path):
    conf = tmp_path / "run.json"
    conf.write_text(json.dumps(SMALL))
    same, total = [], 0
    for cmd in ("bands", "surface", "dirac", "fermi", "perturb", "validate"):
        for fmt in ("csv", "json"):
            outs = []
            # second run single-threaded: results must not depend on the batch split
            for threads in ("4", "1"):
                out = tmp_path / f"{cmd}-{threads}.{fmt}"
                env = dict(os.environ, HEXASPEC_THREADS=threads)
                subprocess.run([sys.executable, "-m", "hexaspec.cli", cmd, "--config", str(conf),
                                "--out", str(out), "--format", fmt], env=env, check=True)
                outs.append(out.read_bytes())
            total += 1
            if outs[0] == outs[1] and outs[0]:
                same.append(f"{cmd}.{fmt}")
    report(12, len(same) == total, f"{len(same)}/{total} command/format pairs byte-identical")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
