"""Dataset builders behind the command-line front end.

Each builder takes a :class:`~hexaspec.config.RunConfig` and returns
``(fields, rows)``: the column order and a list of dicts.  Iteration order
is fixed (quasimomentum grid index, then energy), so identical configs
give identical datasets.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .config import RunConfig
from .edge import dirichlet_spectrum_scan
from .graphene import (brillouin_to_cartesian, dirac_scan, fermi_classify_many,
                       solve_sheets_many, theta_grid)
from .invariants import run_invariants
from .lyapunov import real_line_band_structure
from .perturbation import PerturbationConfig, perturbed_roots_many
from .potential import build_potential
from .surrogate import MonodromySurrogate

BANDS_FIELDS = ("lo", "hi", "multiplicity", "edge_kind_lo", "edge_kind_hi")
SURFACE_FIELDS = ("theta1", "theta2", "k1", "k2", "sheet_index", "lambda")
DIRAC_FIELDS = ("theta1_star", "theta2_star", "lambda_star", "branch", "cone_type")
FERMI_FIELDS = ("lambda", "class")
PERTURB_FIELDS = ("theta1", "theta2", "lambda_exact", "lambda_first_order", "discrepancy")
VALIDATE_FIELDS = ("invariant", "value", "tolerance", "status")


def _setup(cfg: RunConfig):
    q = build_potential(cfg.potential.cosine)
    window = (cfg.lambda_.min, cfg.lambda_.max)
    return q, window, cfg.lambda_.grid, cfg.tolerances.integrator, cfg.tolerances.root


def bands(cfg: RunConfig):
    """Bands and gaps over the window (multiplicity 0 marks a gap), plus one
    zero-width row per flat band with multiplicity ``inf``."""
    q, window, grid, tol, rtol = _setup(cfg)
    bs = real_line_band_structure(q, window, grid, tol, rtol)
    segs = [(b.lo, b.hi, b.multiplicity, b.edge_lo, b.edge_hi) for b in bs.bands]
    # a gap's ends are the neighbouring bands' ends
    ends = {}
    for b in bs.bands:
        ends[b.lo] = b.edge_lo
        ends[b.hi] = b.edge_hi
    for lo, hi in bs.gaps:
        segs.append((lo, hi, 0, ends.get(lo, "scan-boundary"), ends.get(hi, "scan-boundary")))
    flat = []
    if window[1] > 0:
        flat = [r for r in dirichlet_spectrum_scan(q, window[1], grid, tol, rtol) if r >= window[0]]
    segs += [(r, r, "inf", "sigma_pp", "sigma_pp") for r in flat]
    segs.sort(key=lambda s: (s[0], s[1], str(s[2])))
    return BANDS_FIELDS, [dict(zip(BANDS_FIELDS, s)) for s in segs]


@lru_cache(maxsize=None)
def _hex_group():
    """The 12 integer maps of the quasimomentum torus that preserve |s0|:
    generated by the swap, the inversion and ``(a, b) -> (-b, a - b)``."""
    gens = [np.array([[0, 1], [1, 0]]), -np.eye(2, dtype=int), np.array([[0, -1], [1, -1]])]
    group = {tuple(np.eye(2, dtype=int).ravel())}
    frontier = list(group)
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                m = tuple(int(v) for v in (h @ np.array(g).reshape(2, 2)).ravel())
                if m not in group:
                    group.add(m)
                    nxt.append(m)
        frontier = nxt
    return tuple(np.array(g).reshape(2, 2) for g in sorted(group))


def s0_orbit_representatives(n: int):
    """Group the ``n x n`` theta grid into orbits on which ``|s0|`` is equal.

    Grid point ``i`` sits at ``theta = j pi / (n - 1)`` with
    ``j = 2 i - (n - 1)``; the symmetries act on ``j`` modulo ``2 (n - 1)``.
    Returns ``(rep_thetas, inverse)`` with ``inverse`` mapping each flattened
    grid point (row-major in ``(theta1, theta2)``) to its representative.
    """
    N = n - 1
    period = 2 * N
    j = 2 * np.arange(n) - N
    J1, J2 = np.meshgrid(j, j, indexing="ij")
    pts = np.stack([J1.ravel(), J2.ravel()])
    best = np.full(pts.shape[1], np.iinfo(np.int64).max, dtype=np.int64)
    for g in _hex_group():
        img = (g @ pts) % period
        valid = np.all(img % 2 == N % 2, axis=0)
        key = img[0].astype(np.int64) * period + img[1]
        best = np.where(valid & (key < best), key, best)
    keys, inverse = np.unique(best, return_inverse=True)
    a, b = keys // period, keys % period
    wrap = lambda v: np.where(v > N, v - period, v)
    reps = np.stack([wrap(a), wrap(b)], -1) * (np.pi / N)
    return reps, inverse


def surface(cfg: RunConfig):
    """Dispersion sheets over the ``theta.grid`` square; ``sheet_index``
    ranks the sheets at each quasimomentum by energy."""
    q, window, grid, tol, rtol = _setup(cfg)
    n = cfg.theta.grid
    th = theta_grid(n)
    reps, inverse = s0_orbit_representatives(n)
    src = MonodromySurrogate(q, window, tol)
    sheets = solve_sheets_many(src, reps, window, grid, tol, rtol)
    rows = []
    for idx in range(n * n):
        t1, t2 = float(th[idx // n]), float(th[idx % n])
        k1, k2 = brillouin_to_cartesian((t1, t2))
        lams = sorted(s.lam for s in sheets[inverse[idx]])
        for rank, lam in enumerate(lams):
            rows.append(dict(zip(SURFACE_FIELDS, (t1, t2, k1, k2, rank, lam))))
    return SURFACE_FIELDS, rows


def dirac(cfg: RunConfig):
    q, window, grid, tol, rtol = _setup(cfg)
    rows = []
    for p in dirac_scan(q, window, grid, tol, rtol):
        rows.append(dict(zip(DIRAC_FIELDS, (p.theta_star.theta1, p.theta_star.theta2,
                                            p.lambda_star, p.branch, p.cone_type))))
    return DIRAC_FIELDS, rows


def fermi(cfg: RunConfig):
    q, window, grid, tol, _ = _setup(cfg)
    lams = np.linspace(window[0], window[1], grid)
    return FERMI_FIELDS, [{"lambda": f.lam, "class": f.cls}
                          for f in fermi_classify_many(q, lams, tol)]


def perturb(cfg: RunConfig):
    """Exact perturbed roots over the theta grid, each paired with the
    nearest root of the first-order determinant."""
    q, window, grid, tol, rtol = _setup(cfg)
    pc = PerturbationConfig(cfg.perturbation.epsilon, cfg.perturbation.c1)
    n = cfg.theta.grid
    th = theta_grid(n)
    T = np.stack(np.meshgrid(th, th, indexing="ij"), -1).reshape(-1, 2)
    # det M_eps(-theta) is the conjugate of det M_eps(theta): solve half
    mirror = (n * n - 1) - np.arange(n * n)
    solve = np.arange(n * n) <= mirror
    src = MonodromySurrogate(q, window, tol)
    exact = perturbed_roots_many(src, T[solve], pc, window, grid, tol, rtol)
    first = perturbed_roots_many(src, T[solve], pc, window, grid, tol, rtol, order="first")
    slot = np.full(n * n, -1)
    slot[solve] = np.arange(int(solve.sum()))
    rows = []
    for idx in range(n * n):
        s = slot[idx] if solve[idx] else slot[mirror[idx]]
        fo = np.asarray(first[s])
        for lam in exact[s]:
            if fo.size:
                near = float(fo[np.argmin(np.abs(fo - lam))])
                disc = abs(lam - near)
            else:
                near = disc = None
            rows.append(dict(zip(PERTURB_FIELDS, (float(T[idx, 0]), float(T[idx, 1]),
                                                  lam, near, disc))))
    return PERTURB_FIELDS, rows


def validate(cfg: RunConfig):
    """Invariant table; the second return value is False if any failed."""
    q, window, _, tol, _ = _setup(cfg)
    pc = PerturbationConfig(cfg.perturbation.epsilon, cfg.perturbation.c1)
    results = run_invariants(q, window, tol, pc)
    rows = [dict(zip(VALIDATE_FIELDS, (r.name, None if math.isnan(r.value) else r.value,
                                       r.tolerance, r.status)))
            for r in results]
    return VALIDATE_FIELDS, rows, all(r.passed for r in results)


COMMANDS = {
    "bands": bands,
    "surface": surface,
    "dirac": dirac,
    "fermi": fermi,
    "perturb": perturb,
}
