"""Invariant suite shared by ``hexaspec validate`` and the tests.

Every check returns one number (a worst-case residual over its sample)
compared against a fixed tolerance.  Samples come from a seeded generator,
so repeated runs give identical tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edge import (WRONSKIAN_FORM, dirichlet_spectrum_scan,
                   g0_from_monodromy, g_symmetry_residuals, integrate_fundamental,
                   monodromy_batch, phi_basis_from_monodromy, phi_symmetry_residuals,
                   relative_dirichlet_indicator, round_trip_residual, wronskian)
from .graphene import (DELTA0, SpectrumClass, classify_lambda, dispersion_residual,
                       factored_residual, fermi_polynomial, loop_state_residual,
                       residual_from_g0, s0, s0_norm, second_order_residual,
                       solve_sheets_many)
from .lyapunov import (branches, lyapunov_batch, periodic_antiperiodic_eigenvalues, t1_t2,
                       t2_trace_oracle)
from .oracles import free_monodromy, reference_monodromy
from .perturbation import (PerturbationConfig, _expansion_parts, assemble_m_eps, det_expansion,
                           re_s0_s1, s_k_eps)
from .potential import PeriodicPotential
from .surrogate import MonodromySurrogate

FREE_ORACLE_LAMBDAS = (0.5, 1.0, 10.0, 100.0, 400.0)


@dataclass(frozen=True)
class InvariantResult:
    name: str
    value: float
    tolerance: float
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return self.skipped or (math.isfinite(self.value) and self.value <= self.tolerance)

    @property
    def status(self) -> str:
        return "skip" if self.skipped else ("pass" if self.passed else "fail")


@dataclass
class _Context:
    q: PeriodicPotential
    window: tuple
    tol: float
    config: PerturbationConfig
    rng: np.random.Generator

    def lambdas(self, n, lo=None, hi=None, avoid_dirichlet=False):
        a = self.window[0] if lo is None else max(lo, self.window[0])
        b = self.window[1] if hi is None else min(hi, self.window[1])
        if not b > a:
            a, b = self.window
        lams = self.rng.uniform(a, b, 4 * n if avoid_dirichlet else n)
        if avoid_dirichlet:
            M = monodromy_batch(self.q, lams, self.tol)
            lams = lams[relative_dirichlet_indicator(M) > 1e-3][:n]
        return np.sort(lams)

    def thetas(self, n):
        return self.rng.uniform(-np.pi, np.pi, (n, 2))


_REGISTRY = []


def _check(name, tolerance):
    def deco(fn):
        _REGISTRY.append((name, tolerance, fn))
        return fn
    return deco


class _Skip(Exception):
    pass


# --- potential ---------------------------------------------------------------

@_check("potential.reflection_symmetry", 1e-14)
def _(ctx):
    x = np.linspace(0.0, 1.0, 1001)
    return float(np.abs(ctx.q(x) - ctx.q(1.0 - x)).max())


@_check("potential.zero_mean", 1e-10)
def _(ctx):
    x = np.linspace(0.0, 1.0, 10_000)
    return abs(float(np.trapezoid(ctx.q(x), x)))


# --- edge ----------------------------------------------------------------------

@_check("edge.symplectic", 1e-8)
def _(ctx):
    lams = ctx.lambdas(20, -50.0, 500.0)
    M = monodromy_batch(ctx.q, lams, ctx.tol)
    res = np.swapaxes(M, 1, 2) @ WRONSKIAN_FORM @ M - WRONSKIAN_FORM
    return float(np.abs(res).max())


@_check("edge.unimodular", 1e-9)
def _(ctx):
    lams = ctx.lambdas(20, -50.0, 500.0)
    return float(np.abs(np.linalg.det(monodromy_batch(ctx.q, lams, ctx.tol)) - 1.0).max())


@_check("edge.wronskian_constancy", 1e-9)
def _(ctx):
    worst = 0.0
    for lam in ctx.lambdas(3, -50.0, 500.0):
        fb = integrate_fundamental(ctx.q, lam, min(ctx.tol, 1e-12), n_samples=101)
        S = fb.samples
        for i in range(4):
            for j in range(i + 1, 4):
                w = wronskian(S[:, :, i], S[:, :, j])
                worst = max(worst, float(np.ptp(w)))
    return worst


@_check("edge.reference_monodromy", 1e-8)
def _(ctx):
    """Closed forms for the free operator, DOP853 otherwise."""
    if ctx.q.is_free:
        lams = np.array(FREE_ORACLE_LAMBDAS)
        M = monodromy_batch(ctx.q, lams, min(ctx.tol, 1e-12))
        return max(float(np.abs(M[i] - free_monodromy(l)).max()) for i, l in enumerate(lams))
    lams = ctx.lambdas(3, -50.0, 400.0)
    M = monodromy_batch(ctx.q, lams, min(ctx.tol, 1e-12))
    return max(float(np.abs(M[i] - reference_monodromy(ctx.q, l)).max() / max(1.0, np.abs(M[i]).max()))
               for i, l in enumerate(lams))


@_check("edge.phi_symmetry", 1e-9)
def _(ctx):
    tol = min(ctx.tol, 1e-12)
    lams = ctx.lambdas(8, -50.0, 500.0, avoid_dirichlet=True)
    worst = 0.0
    for lam, M in zip(lams, monodromy_batch(ctx.q, lams, tol)):
        pb = phi_basis_from_monodromy(M, lam)
        worst = max(worst, max(abs(v) for v in phi_symmetry_residuals(pb).values()))
    return worst


@_check("edge.g_symmetry", 1e-9)
def _(ctx):
    tol = min(ctx.tol, 1e-12)
    lams = ctx.lambdas(8, -50.0, 500.0)
    return max(max(abs(v) for v in g_symmetry_residuals(M).values())
               for M in monodromy_batch(ctx.q, lams, tol))


@_check("edge.g_phi_round_trip", 1e-8)
def _(ctx):
    lams = ctx.lambdas(6, -50.0, 500.0, avoid_dirichlet=True)
    return max(round_trip_residual(ctx.q, lam, min(ctx.tol, 1e-12)) for lam in lams)


@_check("edge.surrogate_agreement", 1e-8)
def _(ctx):
    s = MonodromySurrogate(ctx.q, ctx.window, ctx.tol)
    lams = ctx.lambdas(50)
    M = monodromy_batch(ctx.q, lams, ctx.tol)
    scale = np.maximum(1.0, np.abs(M).max(axis=(1, 2)))
    return float((np.abs(s.evaluate(lams) - M).max(axis=(1, 2)) / scale).max())


# --- Lyapunov ----------------------------------------------------------------------

@_check("lyapunov.branch_sum_product", 1e-10)
def _(ctx):
    t = lyapunov_batch(ctx.q, ctx.lambdas(50), ctx.tol)
    d1, d2 = branches(t.t1, t.t2)
    ok = np.isfinite(d1)
    if not ok.any():
        raise _Skip
    scale = 1.0 + t.t1[ok] ** 2 + np.abs(t.t2[ok])
    return float(max(np.abs(d1[ok] + d2[ok] - 2 * t.t1[ok]).max(),
                     (np.abs(d1[ok] * d2[ok] - (t.t1[ok] ** 2 - t.t2[ok])) / scale).max()))


@_check("lyapunov.trace_cross_check", 1e-7)
def _(ctx):
    lams = ctx.lambdas(50, avoid_dirichlet=True)
    M = monodromy_batch(ctx.q, lams, ctx.tol)
    t1, t2 = t1_t2(g0_from_monodromy(M))
    scale = np.maximum(1.0, np.abs(M).max(axis=(1, 2)))
    tr = np.abs(2.0 * t1 - np.trace(M, axis1=1, axis2=2) / 2.0) / scale
    t2o = np.abs(t2 - t2_trace_oracle(M)) / scale ** 2
    return float(max(tr.max(), t2o.max()))


@_check("lyapunov.floquet_determinants", 1e-9)
def _(ctx):
    lams = ctx.lambdas(50)
    M = monodromy_batch(ctx.q, lams, ctx.tol)
    t1, t2 = t1_t2(g0_from_monodromy(M))
    I = np.eye(4)
    worst = 0.0
    for sign in (1.0, -1.0):
        lhs = (1.0 - sign * t1) ** 2 - t2
        rhs = np.linalg.det(M - sign * I) / 4.0
        scale = np.maximum(1.0, np.abs(M).max(axis=(1, 2))) ** 4
        worst = max(worst, float((np.abs(lhs - rhs) / scale).max()))
    return worst


@_check("lyapunov.band_monotonicity", 0.0)
def _(ctx):
    """Sign changes of the finite-difference slope inside |Delta_k| < 1 runs.

    A branch can touch -1 or 1 between samples (a closed gap); such a
    turning point is a periodic or anti-periodic eigenvalue and is not in
    a band interior, so it does not count.
    """
    pts = np.linspace(*ctx.window, 1000)
    t = lyapunov_batch(ctx.q, pts, ctx.tol)
    per, anti = periodic_antiperiodic_eigenvalues(ctx.q, pts[-1], 1000, lambda_min=pts[0],
                                                  tol=ctx.tol)
    edges = np.sort(np.asarray(list(per) + list(anti)))

    def at_edge(i):
        return bool(np.any((edges >= pts[i - 1]) & (edges <= pts[i + 1])))

    bad = 0
    for k in (1, 2):
        d = t.delta(k)
        with np.errstate(invalid="ignore"):
            inside = np.abs(d) < 1.0
        run = inside[:-1] & inside[1:]
        slope = np.diff(d)
        # split at breaks of the run and count slope sign changes within each
        start = None
        for i in range(run.size + 1):
            if i < run.size and run[i]:
                start = i if start is None else start
                continue
            if start is not None:
                s = np.sign(slope[start:i])
                flips = np.nonzero(s[1:] * s[:-1] < 0)[0] + start + 1
                bad += sum(1 for j in flips if not at_edge(j))
                start = None
    return float(bad)


@_check("lyapunov.spectrum_t2_nonnegative", 1e-10)
def _(ctx):
    lams = ctx.lambdas(30, avoid_dirichlet=True)
    worst = 0.0
    t = lyapunov_batch(ctx.q, lams, ctx.tol)
    for lam, t2 in zip(lams, t.t2):
        if classify_lambda(ctx.q, lam, ctx.tol) is SpectrumClass.AC:
            worst = max(worst, float(-t2))
    return worst


# --- graphene ------------------------------------------------------------------------

@_check("graphene.s0_range", 0.0)
def _(ctx):
    g = np.linspace(-np.pi, np.pi, 201)
    T = np.stack(np.meshgrid(g, g, indexing="ij"), -1)
    v = s0_norm(T)
    return float(max(0.0, -v.min(), v.max() - 3.0))


@_check("graphene.hermitian_symmetry", 1e-12)
def _(ctx):
    worst = 0.0
    for lam, th in zip(ctx.lambdas(10, avoid_dirichlet=True), ctx.thetas(10)):
        a = dispersion_residual(ctx.q, lam, th, ctx.tol)
        b = dispersion_residual(ctx.q, lam, -th, ctx.tol)
        worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return worst


@_check("graphene.factored_residual", 1e-9)
def _(ctx):
    lams = ctx.lambdas(50, avoid_dirichlet=True)
    G0 = g0_from_monodromy(monodromy_batch(ctx.q, lams, ctx.tol))
    t1, t2 = t1_t2(G0)
    c = s0_norm(ctx.thetas(lams.size)) / 3.0
    a, b = residual_from_g0(G0, c), factored_residual(t1, t2, c)
    scale = (1.0 + t1 ** 2 + np.abs(t2)) ** 2
    return float((np.abs(a - b) / scale).max())


@_check("graphene.sheet_zero_set", 1e-8)
def _(ctx):
    """Sheets solved from the branches are zeros of the direct residual."""
    th = ctx.thetas(6)
    lo, hi = max(ctx.window[0], 0.0), min(ctx.window[1], 300.0)
    if not hi > lo:
        lo, hi = ctx.window
    sheets = solve_sheets_many(ctx.q, th, (lo, hi), 300, ctx.tol)
    worst = 0.0
    for t, rows in zip(th, sheets):
        c = s0_norm(t) / 3.0
        lams = np.array([s.lam for s in rows])
        if lams.size == 0:
            continue
        G0 = g0_from_monodromy(monodromy_batch(ctx.q, lams, ctx.tol))
        t1, t2 = t1_t2(G0)
        val = np.abs(residual_from_g0(G0, c)) / (1.0 + t1 ** 2 + np.abs(t2)) ** 2
        d = np.array([lyapunov_batch(ctx.q, [s.lam], ctx.tol).delta(s.branch)[0] - s.sign * c
                      for s in rows])
        worst = max(worst, float(val.max()), float(np.abs(d).max()))
    return worst


@_check("graphene.fermi_polynomial", 1e-12)
def _(ctx):
    th = ctx.thetas(200)
    z1, z2 = np.exp(1j * th[:, 0]), np.exp(1j * th[:, 1])
    lhs = s0_norm(th) ** 2
    rhs = fermi_polynomial(z1, z2) * fermi_polynomial(1 / z1, 1 / z2)
    return float(np.abs(lhs - rhs).max())


@_check("graphene.second_order_correspondence", 1e-8)
def _(ctx):
    if not ctx.q.is_free:
        raise _Skip
    th = ctx.thetas(25)
    sheets = solve_sheets_many(ctx.q, th, (1e-6, 300.0), 300, ctx.tol)
    vals = [abs(second_order_residual(math.sqrt(s.lam), t))
            for t, rows in zip(th, sheets) for s in rows]
    return float(max(vals)) if vals else math.nan


@_check("graphene.flat_band_loop_state", 1e-8)
def _(ctx):
    hi = ctx.window[1]
    if hi <= 0:
        raise _Skip
    roots = [r for r in dirichlet_spectrum_scan(ctx.q, hi, 400, ctx.tol)
             if r >= ctx.window[0]][:2]
    if not roots:
        raise _Skip
    return max(loop_state_residual(ctx.q, r, ctx.tol) for r in roots)


# --- perturbation ----------------------------------------------------------------------

@_check("perturbation.re_s0_s1_bound", 1e-12)
def _(ctx):
    g = np.linspace(-np.pi, np.pi, 201)
    T = np.stack(np.meshgrid(g, g, indexing="ij"), -1)
    c1 = ctx.config.c1
    return float(max(0.0, np.abs(re_s0_s1(T, ctx.config)).max() - 2.0 * (1.0 + abs(c1))))


@_check("perturbation.re_s0_s1_periodicity", 1e-12)
def _(ctx):
    th = ctx.thetas(200)
    base = re_s0_s1(th, ctx.config)
    worst = 0.0
    for shift in ((2 * np.pi, 0.0), (0.0, 2 * np.pi)):
        worst = max(worst, float(np.abs(re_s0_s1(th + np.array(shift), ctx.config) - base).max()))
    return worst


@_check("perturbation.s_k_at_zero_eps", 0.0)
def _(ctx):
    cfg = ctx.config.with_epsilon(0.0)
    th = ctx.thetas(50)
    return float(max(np.abs(s_k_eps(k, th, cfg) - s0(th)).max() for k in range(3)))


@_check("perturbation.d1_vanishes_at_special_theta", 1e-12)
def _(ctx):
    """``d1`` relative to the size of its bracket; ``Re(s0 conj s1)`` is
    zero there only up to round-off."""
    special = [(0.0, 0.0), (DELTA0, -DELTA0), (-DELTA0, DELTA0)]
    worst = 0.0
    for lam in ctx.lambdas(3, avoid_dirichlet=True):
        _, G2, L, adj = _expansion_parts(ctx.q, lam, ctx.tol)
        for th in special:
            c2 = (s0_norm(th) / 3.0) ** 2
            scale = c2 * abs(np.trace(L)) + abs(np.trace(adj @ L))
            d1 = det_expansion(ctx.q, lam, th, ctx.config, ctx.tol)[1]
            worst = max(worst, abs(d1) / max(scale, 1e-300))
    return worst


@_check("perturbation.d0_identity", 1e-10)
def _(ctx):
    """Measured against ``(c^2 + max|G0^2|)^2``, the size of the terms
    that cancel in ``d0``."""
    cfg = ctx.config.with_epsilon(0.0)
    worst = 0.0
    for lam, th in zip(ctx.lambdas(10, avoid_dirichlet=True), ctx.thetas(10)):
        _, d = assemble_m_eps(ctx.q, lam, th, cfg, ctx.tol)
        d0, _ = det_expansion(ctx.q, lam, th, cfg, ctx.tol)
        _, G2, _, _ = _expansion_parts(ctx.q, lam, ctx.tol)
        scale = ((s0_norm(th) / 3.0) ** 2 + np.abs(G2).max()) ** 2
        worst = max(worst, abs(d - d0) / scale)
    return worst


@_check("perturbation.d1_central_difference", 1e-5)
def _(ctx):
    h = 1e-4
    c1 = ctx.config.c1
    worst = 0.0
    lo, hi = ctx.window[0], min(ctx.window[1], 300.0)
    for lam, th in zip(ctx.lambdas(10, lo, hi, avoid_dirichlet=True), ctx.thetas(10)):
        _, d1 = det_expansion(ctx.q, lam, th, PerturbationConfig(0.0, c1), ctx.tol)
        dp = assemble_m_eps(ctx.q, lam, th, PerturbationConfig(h, c1), ctx.tol)[1].real
        dm = assemble_m_eps(ctx.q, lam, th, PerturbationConfig(-h, c1), ctx.tol)[1].real
        fd = (dp - dm) / (2 * h)
        worst = max(worst, abs(fd - d1) / max(abs(d1), 1e-300))
    return worst


def run_invariants(q: PeriodicPotential, window=(-50.0, 1000.0), tol: float = 1e-10,
                   config: PerturbationConfig | None = None, seed: int = 0,
                   only=None) -> list:
    """Evaluate every registered invariant.

    Parameters
    ----------
    q : PeriodicPotential
    window : (float, float)
        Energy window samples are drawn from (several checks also clip it).
    tol : float
        Integrator tolerance; checks whose tolerance needs a tighter
        integration use ``min(tol, 1e-12)``.
    config : PerturbationConfig, optional
        Supplies ``c1`` for the perturbation checks.
    seed : int
    only : iterable of str, optional
        Restrict to these check names.

    Returns
    -------
    list of InvariantResult
    """
    config = config or PerturbationConfig()
    out = []
    for index, (name, tolerance, fn) in enumerate(_REGISTRY):
        if only is not None and name not in only:
            continue
        ctx = _Context(q, tuple(map(float, window)), tol, config,
                       np.random.default_rng([seed, index]))
        try:
            value = float(fn(ctx))
            out.append(InvariantResult(name, value, tolerance))
        except _Skip:
            out.append(InvariantResult(name, math.nan, tolerance, skipped=True))
    return out


def invariant_names():
    return [name for name, _, _ in _REGISTRY]
