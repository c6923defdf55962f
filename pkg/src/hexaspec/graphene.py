"""Dispersion relation and spectral classification of the hexagonal lattice.

At quasimomentum ``theta`` and energy ``lam`` outside the hinged-edge
spectrum, the Bloch variety is ``det(G0(lam)^2 - c^2 I) = 0`` with
``c = |s0(theta)| / 3``; equivalently some Lyapunov branch satisfies
``Delta_k(lam) = +-c``.  Hinged-edge eigenvalues are flat bands.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .edge import (DEFAULT_TOL, DIRICHLET_THRESHOLD, dirichlet_matrix,
                   g0_from_monodromy, in_dirichlet_spectrum, monodromy, monodromy_batch,
                   relative_dirichlet_indicator)
from .errors import DomainError, FlatBranch
from .lyapunov import LyapunovTable, branches, lyapunov_batch, t1_t2
from .potential import PeriodicPotential
from .roots import refine_brackets, scan_roots

DELTA0 = 2.0 * math.pi / 3.0
SHEET_TOUCH_TOL = 1e-8

# Brillouin-zone coordinates -> Cartesian wave vector
B_STAR = np.array([[2.0, -1.0], [0.0, math.sqrt(3.0)]]) / 3.0


@dataclass(frozen=True)
class Quasimomentum:
    """Floquet phases ``(theta1, theta2)`` in ``[-pi, pi]^2``."""

    theta1: float
    theta2: float

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            v = float(getattr(self, name))
            if not -math.pi - 1e-12 <= v <= math.pi + 1e-12:
                raise DomainError(f"{name}={v!r} outside [-pi, pi]")
            object.__setattr__(self, name, v)

    def __neg__(self):
        return Quasimomentum(-self.theta1, -self.theta2)

    def as_array(self):
        return np.array([self.theta1, self.theta2])


THETA_STAR = Quasimomentum(DELTA0, -DELTA0)


def _thetas(theta):
    if isinstance(theta, Quasimomentum):
        return theta.theta1, theta.theta2
    t = np.asarray(theta, dtype=float)
    return t[..., 0], t[..., 1]


def theta_grid(n: int):
    """``n`` points on ``[-pi, pi]``, endpoints included, exactly symmetric
    about zero so that ``-theta`` of a grid point is again a grid point."""
    if n < 2:
        raise ValueError("theta grid needs at least 2 points")
    t = np.linspace(-np.pi, np.pi, n)
    return 0.5 * (t - t[::-1])


def s0(theta):
    """``1 + exp(-i theta1) + exp(-i theta2)``; vectorized over a trailing
    axis of length 2."""
    t1, t2 = _thetas(theta)
    return 1.0 + np.exp(-1j * t1) + np.exp(-1j * t2)


def s0_norm(theta):
    """``|s0(theta)|``, in ``[0, 3]``."""
    v = np.abs(s0(theta))
    return float(v) if np.ndim(v) == 0 else v


def fermi_polynomial(w1, w2):
    """``P(w1, w2) = 1 + w1 + w2``; ``|s0|^2 = P(z) P(1/z)`` on the torus."""
    return 1.0 + w1 + w2


def brillouin_to_cartesian(theta):
    """Cartesian wave vector ``kappa = B* theta``."""
    t1, t2 = _thetas(theta)
    k1 = B_STAR[0, 0] * t1 + B_STAR[0, 1] * t2
    k2 = B_STAR[1, 0] * t1 + B_STAR[1, 1] * t2
    if np.ndim(k1) == 0:
        return float(k1), float(k2)
    return k1, k2


# --- discriminant matrix and dispersion residual ---------------------------

@dataclass(frozen=True, eq=False)
class G0Matrix:
    """``[[g1(1), g3(1)], [g1''(1), g3''(1)]]`` at one energy."""

    lam: float
    entries: np.ndarray

    @property
    def t1(self):
        return float(t1_t2(self.entries)[0])

    @property
    def t2(self):
        return float(t1_t2(self.entries)[1])


def g0_matrix(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> G0Matrix:
    return G0Matrix(float(lam), np.array(g0_from_monodromy(monodromy(q, lam, tol))))


def residual_from_g0(G0, c):
    """``det(G0^2 - c^2 I)``, batched."""
    G2 = np.asarray(G0) @ np.asarray(G0)
    c2 = np.asarray(c) ** 2
    return ((G2[..., 0, 0] - c2) * (G2[..., 1, 1] - c2)
            - G2[..., 0, 1] * G2[..., 1, 0])


def factored_residual(t1, t2, c):
    """``(Delta1^2 - c^2)(Delta2^2 - c^2)`` written through ``T1, T2`` so it
    stays real where the branches are complex."""
    det = t1 ** 2 - t2          # Delta1 Delta2
    tr2 = 2.0 * (t1 ** 2 + t2)  # Delta1^2 + Delta2^2
    c2 = np.asarray(c) ** 2
    return det ** 2 - c2 * tr2 + c2 ** 2


def dispersion_residual(q: PeriodicPotential, lam: float, theta,
                        tol: float = DEFAULT_TOL) -> float:
    """``det(G0(lam)^2 - |s0(theta)|^2 / 9 I)``.

    Raises
    ------
    FlatBranch
        ``lam`` is a hinged-edge eigenvalue: in the spectrum for every
        ``theta``.
    """
    M = monodromy(q, lam, tol)
    rel = float(relative_dirichlet_indicator(M))
    if rel < DIRICHLET_THRESHOLD:
        raise FlatBranch(lam, rel)
    return float(residual_from_g0(g0_from_monodromy(M), s0_norm(theta) / 3.0))


# --- sheets ----------------------------------------------------------------

class Sheet(NamedTuple):
    lam: float
    branch: int
    sign: int


def _branch_extrema(q, window, grid, tol, root_tol):
    """Critical points of Delta_1 and Delta_2 in the window (theta-free)."""
    pts = np.linspace(window[0], window[1], grid)
    table = lyapunov_batch(q, pts, tol, derivative=True)
    out = {}
    for k in (1, 2):
        d = table.ddelta(k)
        br = np.nonzero(d[:-1] * d[1:] < 0)[0]

        def fp(x, k=k):
            return lyapunov_batch(q, x, tol, derivative=True).ddelta(k)

        x = refine_brackets(fp, pts[br], pts[br + 1], root_tol)
        vals = lyapunov_batch(q, x, tol).delta(k) if x.size else np.zeros(0)
        out[k] = (x, vals)
    return pts, table, out


def solve_sheets_many(q: PeriodicPotential, thetas, lambda_window, grid: int,
                      tol: float = DEFAULT_TOL, root_tol: float = 1e-10):
    """Dispersion sheets for many quasimomenta at once.

    The branches depend on lambda only, so they are tabulated once on the
    grid; every ``(theta, branch, sign)`` crossing is then refined in one
    batched bracket solve.  A branch extremum that touches ``+-c`` within
    ``1e-8`` is a tangential root; so is a window end that does.

    Returns
    -------
    list of list of Sheet
        One sorted list per quasimomentum.
    """
    lo, hi = map(float, lambda_window)
    if not hi > lo or grid < 2:
        raise ValueError("invalid lambda window or grid")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    c = s0_norm(thetas) / 3.0
    c = np.atleast_1d(c)
    pts, table, extrema = _branch_extrema(q, (lo, hi), grid, tol, root_tol)
    D = {1: table.delta(1), 2: table.delta(2)}

    ti, ks, ss, blo, bhi, targets = [], [], [], [], [], []
    found = [[] for _ in range(len(thetas))]
    for k in (1, 2):
        for sign in (1, -1):
            F = D[k][None, :] - sign * c[:, None]
            with np.errstate(invalid="ignore"):
                cross = F[:, :-1] * F[:, 1:] < 0
            i, j = np.nonzero(cross)
            ti.append(i)
            ks.append(np.full(i.size, k))
            ss.append(np.full(i.size, sign))
            blo.append(pts[j])
            bhi.append(pts[j + 1])
            targets.append(sign * c[i])
            # exact grid hits and touching window ends
            for e in (0, len(pts) - 1):
                near = np.abs(F[:, e]) < SHEET_TOUCH_TOL
                for t in np.nonzero(near)[0]:
                    found[t].append(Sheet(float(pts[e]), k, sign))
            interior = np.nonzero(F[:, 1:-1] == 0.0)
            for t, j0 in zip(*interior):
                found[t].append(Sheet(float(pts[j0 + 1]), k, sign))
            # tangential contacts at branch extrema
            xe, ve = extrema[k]
            for x, v in zip(xe, ve):
                touch = np.nonzero(np.abs(v - sign * c) < SHEET_TOUCH_TOL)[0]
                for t in touch:
                    found[t].append(Sheet(float(x), k, sign))

    ti = np.concatenate(ti)
    if ti.size:
        kk = np.concatenate(ks)
        sg = np.concatenate(ss)
        tg = np.concatenate(targets)

        def f(x, kcode, target):
            tab = lyapunov_batch(q, x, tol)
            return np.where(kcode == 1, tab.delta(1), tab.delta(2)) - target

        roots = refine_brackets(f, np.concatenate(blo), np.concatenate(bhi),
                                root_tol, args=(kk, tg))
        for t, r, k, s in zip(ti, roots, kk, sg):
            found[t].append(Sheet(float(r), int(k), int(s)))
    return [sorted(set(rows)) for rows in found]


def solve_sheets(q: PeriodicPotential, theta, lambda_window, grid: int,
                 tol: float = DEFAULT_TOL, root_tol: float = 1e-10):
    """All ``(lam, branch, sign)`` with ``Delta_branch(lam) = sign |s0|/3``.

    Examples
    --------
    >>> from hexaspec.potential import FREE
    >>> [round(s.lam, 4) for s in solve_sheets(FREE, THETA_STAR, (0, 200), 400)]
    [6.0881, 6.0881]
    """
    t1, t2 = _thetas(theta)
    return solve_sheets_many(q, [[t1, t2]], lambda_window, grid, tol, root_tol)[0]


# --- classification --------------------------------------------------------

class SpectrumClass(str, enum.Enum):
    AC = "sigma_ac"
    PP = "sigma_pp"
    GAP = "gap"


def classify_lambda(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> SpectrumClass:
    """Point spectrum on the hinged-edge eigenvalues, absolutely continuous
    where a branch lies in [-1, 1], gap otherwise.  The singular continuous
    part is empty and never returned."""
    if in_dirichlet_spectrum(q, lam, tol):
        return SpectrumClass.PP
    t1, t2 = t1_t2(g0_from_monodromy(monodromy(q, lam, tol)))
    d1, d2 = branches(t1, t2)
    if abs(d1) <= 1.0 or abs(d2) <= 1.0:
        return SpectrumClass.AC
    return SpectrumClass.GAP


@dataclass(frozen=True)
class FermiClass:
    lam: float
    cls: str  # reducible | irreducible | absent | flat


def fermi_classify(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> FermiClass:
    """Fermi surface type from membership of each branch in [-1, 1]."""
    if in_dirichlet_spectrum(q, lam, tol):
        return FermiClass(float(lam), "flat")
    t1, t2 = t1_t2(g0_from_monodromy(monodromy(q, lam, tol)))
    d1, d2 = branches(t1, t2)
    n = int(abs(d1) <= 1.0) + int(abs(d2) <= 1.0)
    return FermiClass(float(lam), ("absent", "irreducible", "reducible")[n])


def fermi_classify_many(q: PeriodicPotential, lams, tol: float = DEFAULT_TOL):
    """:func:`fermi_classify` over many energies with one batched integration."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    M = monodromy_batch(q, lams, tol)
    flat = relative_dirichlet_indicator(M) < DIRICHLET_THRESHOLD
    d1, d2 = branches(*t1_t2(g0_from_monodromy(M)))
    with np.errstate(invalid="ignore"):
        n = (np.abs(d1) <= 1.0).astype(int) + (np.abs(d2) <= 1.0).astype(int)
    names = ("absent", "irreducible", "reducible")
    return [FermiClass(float(x), "flat" if f else names[k]) for x, f, k in zip(lams, flat, n)]


# --- Dirac points ------------------------------------------------------------

@dataclass(frozen=True)
class DiracPoint:
    """A conical point at ``theta_star`` and ``-theta_star``."""

    theta_star: Quasimomentum
    lambda_star: float
    branch: int
    cone_type: str  # two-cone | four-cone

    @property
    def theta_stars(self):
        return (self.theta_star, -self.theta_star)


def dirac_scan(q: PeriodicPotential, lambda_window, grid: int, tol: float = DEFAULT_TOL,
               root_tol: float = 1e-10, delta: float | None = None,
               n_check: int = 101):
    """Zeros of the Lyapunov branches with ``T2 >= 0`` around them.

    Parameters
    ----------
    delta : float, optional
        Half-width of the neighborhood on which ``T2 >= 0`` is verified;
        default ``max(1e-4, 1e-6 lam*)``.
    n_check : int
        Sample count on that neighborhood.
    """
    lo, hi = map(float, lambda_window)
    pts = np.linspace(lo, hi, grid)
    found = []
    for k in (1, 2):
        def f(x, k=k):
            return lyapunov_batch(q, x, tol).delta(k)

        roots, kinds = scan_roots(f, pts, rtol=root_tol)
        for r in roots:
            found.append((float(r), k))
    found.sort()
    out = []
    for lam, k in found:
        d = delta if delta is not None else max(1e-4, 1e-6 * abs(lam))
        nb = lyapunov_batch(q, np.linspace(lam - d, lam + d, n_check), tol)
        if np.any(nb.t2 < -1e-12):
            continue
        at = lyapunov_batch(q, [lam], tol)
        both = abs(at.delta(1)[0]) < 1e-9 and abs(at.delta(2)[0]) < 1e-9
        cone = "four-cone" if both and np.all(np.abs(nb.t2) < 1.0) else "two-cone"
        if both and any(abs(p.lambda_star - lam) < 1e-9 * max(1, lam) for p in out):
            continue
        out.append(DiracPoint(THETA_STAR, lam, k, cone))
    return out


# --- flat bands: hexagon loop states -----------------------------------------

_REFLECT = np.diag([1.0, -1.0, 1.0, -1.0])

# Hexagon around the cell origin.  Each entry: (edge type 1..3, cell of the
# A end, traversed forward A->B?).  A vertices are x=0 ends, B vertices are
# x=1 ends; the B end of an edge of type k from cell n sits in cell
# n, n-(1,0), n-(0,1) for k = 1, 2, 3.
_HEXAGON = [
    (1, (0, 0), True),
    (2, (1, 0), False),
    (3, (1, 0), True),
    (1, (1, -1), False),
    (2, (1, -1), True),
    (3, (0, 0), False),
]
_B_OFFSET = {1: (0, 0), 2: (-1, 0), 3: (0, -1)}


def dirichlet_mode(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL):
    """Hinged-edge eigenfunction at ``lam`` made symmetric or antisymmetric
    about ``x = 1/2``.

    Returns
    -------
    state0 : ndarray (4,)
        ``(u, u', u'', u''')(0)``, unit norm.
    parity : int
        +1 for ``u(1-x) = u(x)``, -1 for ``u(1-x) = -u(x)``.
    """
    M = np.asarray(monodromy(q, lam, tol))
    if relative_dirichlet_indicator(M) >= DIRICHLET_THRESHOLD:
        raise DomainError(f"lambda={lam!r} is not a hinged-edge eigenvalue")
    D = dirichlet_matrix(M)
    _, _, vt = np.linalg.svd(D)
    a, b = vt[-1]
    u0 = np.array([0.0, a, 0.0, b])
    w0 = _REFLECT @ (M @ u0)          # state of u(1 - x) at 0
    even, odd = u0 + w0, u0 - w0
    if np.linalg.norm(even) >= np.linalg.norm(odd):
        return even / np.linalg.norm(even), 1
    return odd / np.linalg.norm(odd), -1


def loop_state_residual(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL,
                        weights=(1.0, 1.0, 1.0)) -> float:
    """Max vertex-condition residual of the hexagon loop state at ``lam``.

    The symmetric-or-antisymmetric hinged mode is laid along the loop,
    repeated when antisymmetric and alternated in sign when symmetric, and
    zero on every edge off the hexagon.  ``weights`` are the joint factors
    ``sin(delta_k)`` (all equal for the regular lattice).

    Raises
    ------
    DomainError
        ``lam`` is not a hinged-edge eigenvalue.
    """
    M = np.asarray(monodromy(q, lam, tol))
    v0, parity = dirichlet_mode(q, lam, tol)
    v1 = M @ v0
    w = np.asarray(weights, dtype=float)

    # states (at x = 0, at x = 1) in edge coordinates for each hexagon edge
    edges = {}
    sign = 1.0
    for n, (k, cell, forward) in enumerate(_HEXAGON):
        if forward:
            s_0, s_1 = v0, v1
        else:
            s_0, s_1 = _REFLECT @ v1, _REFLECT @ v0
        edges[(k, cell)] = (sign * s_0, sign * s_1)
        if parity == 1:
            sign = -sign

    def vertex_residual(states):
        vals = [s[0] for s in states]
        res = [vals[0] - vals[1], vals[1] - vals[2],
               sum(wk * s[1] for wk, s in zip(w, states)),
               states[0][2] / w[0] - states[1][2] / w[1],
               states[1][2] / w[1] - states[2][2] / w[2],
               sum(s[3] for s in states)]
        return max(abs(r) for r in res)

    zero = np.zeros(4)
    worst = 0.0
    a_cells = {cell for _, cell, _ in _HEXAGON}
    b_cells = {(c[0] + _B_OFFSET[k][0], c[1] + _B_OFFSET[k][1]) for k, c, _ in _HEXAGON}
    for cell in sorted(a_cells):
        states = [edges.get((k, cell), (zero, zero))[0] for k in (1, 2, 3)]
        worst = max(worst, vertex_residual(states))
    for cell in sorted(b_cells):
        states = []
        for k in (1, 2, 3):
            src = (cell[0] - _B_OFFSET[k][0], cell[1] - _B_OFFSET[k][1])
            states.append(edges.get((k, src), (zero, zero))[1])
        worst = max(worst, vertex_residual(states))
    return float(worst)


# --- second-order comparison ---------------------------------------------------

def second_order_residual(Lam, theta):
    """Free second-order graphene variety ``cos^2(sqrt Lam) - |s0|^2/9``.

    For the Laplacian with continuity and Kirchhoff joints the variety is
    ``cos(sqrt Lam) = +-|s0|/3``; its hinged (flat) levels are
    ``Lam = (n pi)^2``.
    """
    return np.cos(np.sqrt(Lam)) ** 2 - (s0_norm(theta) / 3.0) ** 2
