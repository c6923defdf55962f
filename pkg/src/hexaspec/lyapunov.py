"""Lyapunov functions of the periodic edge operator on the real line.

With ``G0`` the 2x2 discriminant matrix ``[[g1(1), g3(1)], [g1''(1), g3''(1)]]``,
``T1 = tr G0 / 2`` and ``T2 = tr(G0)^2 / 4 - det G0``; the two Lyapunov
branches are ``Delta_{1,2} = T1 +- sqrt(T2)``.  ``T2`` is evaluated as
``((a - d) / 2)^2 + b c``, which is algebraically the same but does not
cancel when the diagonal entries are large.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edge import (DEFAULT_TOL, DIRICHLET_THRESHOLD, g0_from_monodromy,
                   monodromy, monodromy_batch, relative_dirichlet_indicator)
from .errors import SingularBasisError
from .potential import PeriodicPotential
from .roots import scan_roots

T2_CLAMP = 1e-12
LAMBDA_MIN = -50.0
EDGE_MATCH_RTOL = 1e-6


def t1_t2(G0):
    """``(T1, T2)`` from discriminant matrices, batched over leading axes."""
    G0 = np.asarray(G0)
    a, b = G0[..., 0, 0], G0[..., 0, 1]
    c, d = G0[..., 1, 0], G0[..., 1, 1]
    return 0.5 * (a + d), 0.25 * (a - d) ** 2 + b * c


def t2_trace_oracle(M):
    """``T2`` from traces of the monodromy: ``(2 tr M^2 + 8 - tr^2 M) / 16``.

    Independent of ``G0``; valid because the multipliers pair up as
    ``tau, 1/tau`` with ``(tau + 1/tau)/2`` the two branches.
    """
    M = np.asarray(M)
    tr = np.trace(M, axis1=-2, axis2=-1)
    tr2 = np.trace(M @ M, axis1=-2, axis2=-1)
    return (2.0 * tr2 + 8.0 - tr ** 2) / 16.0


def _clamp(t2):
    t2 = np.asarray(t2, dtype=float)
    return np.where((t2 < 0.0) & (t2 > -T2_CLAMP), 0.0, t2)


def branches(t1, t2):
    """``(Delta_1, Delta_2)``; NaN where ``T2 < 0``."""
    t2 = _clamp(t2)
    with np.errstate(invalid="ignore"):
        r = np.sqrt(t2)
    r = np.where(t2 < 0.0, np.nan, r)
    return t1 + r, t1 - r


@dataclass(frozen=True)
class LyapunovValues:
    """``T1, T2`` and the branches at one energy (branches ``None`` if T2 < 0)."""

    lam: float
    t1: float
    t2: float
    delta1: float | None
    delta2: float | None


def lyapunov_values(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> LyapunovValues:
    """``T1, T2, Delta_1, Delta_2`` at ``lam`` via the discriminant matrix.

    Raises
    ------
    SingularBasisError
        At a Dirichlet-type eigenvalue, where the discriminant matrix is
        not the reduced transfer matrix; use :func:`t2_trace_oracle` there.
    """
    M = monodromy(q, lam, tol)
    rel = float(relative_dirichlet_indicator(M))
    if rel < DIRICHLET_THRESHOLD:
        raise SingularBasisError(lam, rel)
    t1, t2 = t1_t2(g0_from_monodromy(M))
    t2 = float(_clamp(t2))
    if t2 >= 0.0:
        d1, d2 = float(t1 + np.sqrt(t2)), float(t1 - np.sqrt(t2))
    else:
        d1 = d2 = None
    return LyapunovValues(float(lam), float(t1), t2, d1, d2)


@dataclass(frozen=True, eq=False)
class LyapunovTable:
    """Vectorized ``T1, T2`` (and optionally derivatives) on a lambda grid."""

    lams: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    dt1: np.ndarray | None = None
    dt2: np.ndarray | None = None

    def delta(self, k: int):
        d1, d2 = branches(self.t1, self.t2)
        return d1 if k == 1 else d2

    def ddelta(self, k: int):
        """``dDelta_k / dlam``; NaN where ``T2 <= 0``."""
        t2 = _clamp(self.t2)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(t2 > 0.0, np.sqrt(np.where(t2 > 0, t2, 1.0)), np.nan)
            sign = 1.0 if k == 1 else -1.0
            return self.dt1 + sign * self.dt2 / (2.0 * r)


def lyapunov_batch(q, lams, tol=DEFAULT_TOL, derivative=False) -> LyapunovTable:
    """``T1, T2`` on many energies in one batched integration.

    No Dirichlet screening: as functions of lambda both are entire, and
    scans need them everywhere.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if derivative:
        M, dM = monodromy_batch(q, lams, tol, derivative=True)
    else:
        M, dM = monodromy_batch(q, lams, tol), None
    G = g0_from_monodromy(M)
    t1, t2 = t1_t2(G)
    dt1 = dt2 = None
    if derivative:
        dG = g0_from_monodromy(dM)
        a, b, c, d = G[:, 0, 0], G[:, 0, 1], G[:, 1, 0], G[:, 1, 1]
        da, db, dc, dd = dG[:, 0, 0], dG[:, 0, 1], dG[:, 1, 0], dG[:, 1, 1]
        dt1 = 0.5 * (da + dd)
        dt2 = 0.5 * (a - d) * (da - dd) + db * c + b * dc
    return LyapunovTable(lams, t1, t2, dt1, dt2)


# --- periodic / anti-periodic problems ------------------------------------

def _floquet_fn(q, tol, sign, derivative=False):
    # det(M - sign I)/4 = (1 - sign T1)^2 - T2 for even potentials
    def f(lams):
        t = lyapunov_batch(q, lams, tol)
        return (1.0 - sign * t.t1) ** 2 - t.t2

    def fp(lams):
        t = lyapunov_batch(q, lams, tol, derivative=True)
        return -2.0 * sign * (1.0 - sign * t.t1) * t.dt1 - t.dt2

    def scale(lams):
        t = lyapunov_batch(q, lams, tol)
        return (1.0 + np.abs(t.t1)) ** 2 + np.abs(t.t2)

    return f, fp, scale


def periodic_antiperiodic_eigenvalues(q: PeriodicPotential, lambda_max: float, grid: int,
                                      lambda_min: float = LAMBDA_MIN,
                                      tol: float = DEFAULT_TOL, root_tol: float = 1e-10):
    """Roots of ``det(M - I)/4`` and ``det(M + I)/4`` in ``(lambda_min, lambda_max]``.

    Both determinants are evaluated through the Lyapunov pair as
    ``(1 -+ T1)^2 - T2``.  Double eigenvalues (where a branch touches
    ``+-1`` without crossing) are found from the derivative.

    Returns
    -------
    periodic, antiperiodic : list of float
    """
    if lambda_max <= lambda_min:
        raise ValueError("empty lambda window")
    pts = np.linspace(lambda_min, lambda_max, grid)
    out = []
    for sign in (1.0, -1.0):
        f, fp, scale = _floquet_fn(q, tol, sign)
        roots, _ = scan_roots(f, pts, rtol=root_tol, scale=scale,
                              tangential_tol=1e-8, fprime=fp)
        out.append([float(r) for r in roots if r > lambda_min])
    return out[0], out[1]


# --- resonances -----------------------------------------------------------

@dataclass(frozen=True)
class ResonanceGap:
    """Maximal interval with ``T2 < 0``.

    ``bounded`` is False when an end is the scan window rather than a zero
    of ``T2``.
    """

    lo: float
    hi: float
    bounded: bool = True


def resonance_scan(q: PeriodicPotential, lambda_range, grid: int,
                   tol: float = DEFAULT_TOL, root_tol: float = 1e-10):
    """Real zeros of ``T2`` and the intervals where ``T2 < 0``.

    Returns
    -------
    zeros : list of float
    gaps : list of ResonanceGap
    """
    lo, hi = map(float, lambda_range)
    if not hi > lo:
        raise ValueError("empty lambda window")
    pts = np.linspace(lo, hi, grid)

    def f(lams):
        return _clamp(lyapunov_batch(q, lams, tol).t2)

    def fp(lams):
        return lyapunov_batch(q, lams, tol, derivative=True).dt2

    def scale(lams):
        t = lyapunov_batch(q, lams, tol)
        return 1.0 + t.t1 ** 2

    zeros, _ = scan_roots(f, pts, rtol=root_tol, scale=scale,
                          tangential_tol=1e-8, fprime=fp)
    zeros = [float(z) for z in zeros]

    # T2 < 0 between consecutive zeros (or window ends): test the midpoints
    cuts = [lo] + [z for z in zeros if lo < z < hi] + [hi]
    mids = np.array([(a + b) / 2 for a, b in zip(cuts[:-1], cuts[1:]) if b > a])
    pairs = [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
    gaps = []
    if mids.size:
        neg = f(mids) < 0.0
        for (a, b), n in zip(pairs, neg):
            if n:
                bounded = a != lo and b != hi
                gaps.append(ResonanceGap(a, b, bounded))
    return zeros, gaps


# --- band structure -------------------------------------------------------

@dataclass(frozen=True)
class SpectralBand:
    """A spectral interval of constant multiplicity.

    ``edge_lo``/``edge_hi`` are one of ``periodic``, ``antiperiodic``,
    ``resonance``, ``multiplicity`` (an interior change between 2 and 4)
    or ``scan-boundary``.
    """

    lo: float
    hi: float
    multiplicity: int
    edge_lo: str = "scan-boundary"
    edge_hi: str = "scan-boundary"


@dataclass
class BandStructure:
    bands: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    periodic: list = field(default_factory=list)
    antiperiodic: list = field(default_factory=list)
    resonances: list = field(default_factory=list)


def spectral_multiplicity(table: LyapunovTable):
    """0 (gap), 2 or 4 per grid point.

    In the spectrum when ``T2 >= 0`` and some branch lies in [-1, 1];
    multiplicity 4 when both branches lie in the open interval.
    """
    d1, d2 = table.delta(1), table.delta(2)
    with np.errstate(invalid="ignore"):
        in1 = np.abs(d1) <= 1.0
        in2 = np.abs(d2) <= 1.0
        open1 = np.abs(d1) < 1.0
        open2 = np.abs(d2) < 1.0
    mult = np.where(in1 | in2, 2, 0)
    return np.where(open1 & open2, 4, mult)


def _refine_transitions(q, lo, hi, tol, rtol, max_iter=80):
    # vectorized bisection on the multiplicity label
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lab_lo = spectral_multiplicity(lyapunov_batch(q, lo, tol))
    for _ in range(max_iter):
        width = hi - lo
        if np.all(width <= rtol * np.maximum(1.0, np.abs(lo))):
            break
        mid = 0.5 * (lo + hi)
        lab = spectral_multiplicity(lyapunov_batch(q, mid, tol))
        same = lab == lab_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _label_edge(x, candidates):
    tol = EDGE_MATCH_RTOL * max(1.0, abs(x))
    best, kind = np.inf, None
    for name, roots in candidates:
        for r in roots:
            if abs(r - x) <= tol and abs(r - x) < best:
                best, kind = abs(r - x), name
    return kind


def real_line_band_structure(q: PeriodicPotential, lambda_range, grid: int,
                             tol: float = DEFAULT_TOL, root_tol: float = 1e-10) -> BandStructure:
    """Bands and gaps of the periodic edge operator on the real line.

    The multiplicity label is sampled on a uniform grid, label changes are
    bisected to ``1e-10`` relative, and every interior edge is matched to
    the nearest periodic, anti-periodic or resonance root within
    ``1e-6 max(1, |lambda|)``.  Bands of different multiplicity that touch
    share an edge of kind ``multiplicity`` unless a root matches there.
    """
    lo, hi = map(float, lambda_range)
    if not hi > lo:
        raise ValueError("empty lambda window")
    pts = np.linspace(lo, hi, grid)
    labels = spectral_multiplicity(lyapunov_batch(q, pts, tol))
    change = np.nonzero(labels[:-1] != labels[1:])[0]
    edges = _refine_transitions(q, pts[change], pts[change + 1], tol, 1e-10)

    per, anti = periodic_antiperiodic_eigenvalues(q, hi, grid, lambda_min=lo - 1.0,
                                                  tol=tol, root_tol=root_tol)
    res, _ = resonance_scan(q, (lo, hi), grid, tol=tol, root_tol=root_tol)
    cands = [("periodic", per), ("antiperiodic", anti), ("resonance", res)]

    bounds = [lo] + list(edges) + [hi]
    seg_labels = [labels[0]] + [labels[i + 1] for i in change]
    kinds = ["scan-boundary"]
    for e in edges:
        kinds.append(_label_edge(e, cands) or "multiplicity")
    kinds.append("scan-boundary")

    out = BandStructure(periodic=per, antiperiodic=anti, resonances=res)
    for i, lab in enumerate(seg_labels):
        a, b = float(bounds[i]), float(bounds[i + 1])
        if lab == 0:
            out.gaps.append((a, b))
        else:
            out.bands.append(SpectralBand(a, b, int(lab), kinds[i], kinds[i + 1]))
    return out
