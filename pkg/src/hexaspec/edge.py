"""Fundamental solutions, monodromy and the phi-basis of the edge equation.

Notation: ``M[j, k]`` is the j-th derivative of the fundamental solution
``g_{k+1}`` at ``x = 1``; column ``k`` is the state ``(u, u', u'', u''')`` of
``g_{k+1}``.  The phi-basis solves the hinged-edge problem: ``phi_1`` has
``u(0) = 1``, ``phi_2`` has ``u''(0) = 1``, ``phi_3`` has ``u(1) = 1`` and
``phi_4`` has ``u''(1) = 1``, with the other three of
``u(0), u''(0), u(1), u''(1)`` zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SingularBasisError
from .ode import integrate_monodromy
from .potential import PeriodicPotential
from .roots import scan_roots
from .surrogate import MonodromySurrogate

DEFAULT_TOL = 1e-10
DIRICHLET_THRESHOLD = 1e-8

# a^T J b = a''' b - a'' b' + a' b'' - a b'''
WRONSKIAN_FORM = np.array([
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
])


def wronskian(a, b):
    """Wronskian ``a''' b - a'' b' + a' b'' - a b'''`` of two states.

    Broadcasts over leading axes; the last axis holds ``(u, u', u'', u''')``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a[..., 3] * b[..., 0] - a[..., 2] * b[..., 1]
            + a[..., 1] * b[..., 2] - a[..., 0] * b[..., 3])


@dataclass(frozen=True, eq=False)
class FundamentalBasis:
    """The fundamental solutions ``g_1..g_4`` at one energy.

    Attributes
    ----------
    lam : float
    monodromy : ndarray, shape (4, 4)
        ``monodromy[j, k] = g_{k+1}^{(j)}(1)``.
    integrator_tolerance : float
    x : ndarray or None
        Sample grid, if dense output was requested.
    samples : ndarray or None, shape (len(x), 4, 4)
        ``samples[i, j, k] = g_{k+1}^{(j)}(x_i)``.
    """

    lam: float
    monodromy: np.ndarray
    integrator_tolerance: float
    x: np.ndarray | None = None
    samples: np.ndarray | None = None

    def g(self, k: int, order: int = 0) -> float:
        """``g_k^{(order)}(1)`` with 1-based ``k``."""
        return float(self.monodromy[order, k - 1])


def integrate_fundamental(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL,
                          n_samples: int | None = None) -> FundamentalBasis:
    """Integrate the four fundamental solutions over the unit edge.

    Parameters
    ----------
    q : PeriodicPotential
    lam : float
    tol : float
        Local relative and absolute tolerance of the Runge-Kutta scheme.
    n_samples : int, optional
        Also record every ``g_k`` on a uniform grid of this many points.

    Raises
    ------
    IntegrationError
        Step size underflow; carries ``lam`` and the failing ``x``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    nodes = None if n_samples is None else np.linspace(0.0, 1.0, n_samples)
    M, _, samples = integrate_monodromy(q, [lam], rtol=tol, nodes=nodes)
    return FundamentalBasis(
        lam=float(lam), monodromy=M[0], integrator_tolerance=tol,
        x=nodes, samples=None if samples is None else samples[0],
    )


@lru_cache(maxsize=4096)
def _cached_monodromy(q, lam, tol):
    M = integrate_monodromy(q, [lam], rtol=tol)[0][0]
    M.setflags(write=False)
    return M


def monodromy(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Monodromy matrix at one energy (memoized, read-only).

    ``q`` may also be a :class:`~hexaspec.surrogate.MonodromySurrogate`, in
    which case ``tol`` is the one it was built with.
    """
    if isinstance(q, MonodromySurrogate):
        M = q.evaluate([lam])[0]
        M.setflags(write=False)
        return M
    return _cached_monodromy(q, float(lam), float(tol))


def monodromy_batch(q, lams, tol=DEFAULT_TOL, derivative=False):
    """Monodromy matrices for many energies; optionally with ``dM/dlam``.

    Returns ``M`` of shape ``(n, 4, 4)``, or ``(M, dM)`` when ``derivative``.
    A :class:`~hexaspec.surrogate.MonodromySurrogate` in place of ``q`` is
    evaluated instead of integrated.
    """
    if isinstance(q, MonodromySurrogate):
        return q.evaluate(lams, derivative)
    M, dM, _ = integrate_monodromy(q, lams, rtol=tol, derivative=derivative)
    return (M, dM) if derivative else M


# --- hinged (Dirichlet-type) edge problem ---------------------------------

def dirichlet_matrix(M):
    """``[[g2(1), g4(1)], [g2''(1), g4''(1)]]``, broadcasting over leading axes."""
    M = np.asarray(M)
    return np.stack([np.stack([M[..., 0, 1], M[..., 0, 3]], -1),
                     np.stack([M[..., 2, 1], M[..., 2, 3]], -1)], -2)


def _indicator_and_scale(M):
    a, b = M[..., 0, 1], M[..., 0, 3]
    c, d = M[..., 2, 1], M[..., 2, 3]
    return a * d - b * c, np.abs(a * d) + np.abs(b * c)


def relative_dirichlet_indicator(M):
    """``|det| / (|g2 g4''| + |g4 g2''|)``: the indicator measured against
    the size of the two products that cancel at a Dirichlet eigenvalue."""
    val, scale = _indicator_and_scale(np.asarray(M))
    return np.abs(val) / scale


def dirichlet_indicator(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> float:
    """``det [[g2(1), g4(1)], [g2''(1), g4''(1)]]``.

    Every combination of ``g2`` and ``g4`` already vanishes with its second
    derivative at ``x = 0``, so the determinant is zero exactly when
    ``u(0) = u''(0) = u(1) = u''(1) = 0`` has a nontrivial solution.
    """
    return float(_indicator_and_scale(monodromy(q, lam, tol))[0])


def in_dirichlet_spectrum(q, lam, tol=DEFAULT_TOL, threshold=DIRICHLET_THRESHOLD) -> bool:
    return bool(relative_dirichlet_indicator(monodromy(q, lam, tol)) < threshold)


def dirichlet_spectrum_scan(q: PeriodicPotential, lambda_max: float, grid: int,
                            tol: float = DEFAULT_TOL, root_tol: float = 1e-10):
    """Dirichlet-type eigenvalues in ``(0, lambda_max]``.

    Sign changes of the indicator on a uniform grid are refined to relative
    tolerance ``root_tol``; non-crossing local minima of the relative
    indicator are accepted when they refine below ``DIRICHLET_THRESHOLD``.

    Examples
    --------
    >>> from hexaspec.potential import FREE
    >>> [round(x, 3) for x in dirichlet_spectrum_scan(FREE, 2000.0, 400)]
    [97.409, 1558.545]
    """
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    if grid < 2:
        raise ValueError("grid must be at least 2")

    def f(lams):
        return _indicator_and_scale(monodromy_batch(q, lams, tol))[0]

    def scale(lams):
        return _indicator_and_scale(monodromy_batch(q, lams, tol))[1]

    pts = np.linspace(0.0, lambda_max, grid)
    roots, _ = scan_roots(f, pts, rtol=root_tol, scale=scale,
                          tangential_tol=DIRICHLET_THRESHOLD)
    return [float(r) for r in roots if r > 0.0]


# --- phi-basis -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhiBasis:
    """Hinged-edge basis ``phi_1..phi_4`` at one energy.

    Attributes
    ----------
    lam : float
    g_coefficients : ndarray (4, 4)
        Column ``k`` expresses ``phi_{k+1}`` in the g-basis; since the
        g-basis starts from the identity it is also the state at ``x = 0``.
    at1 : ndarray (4, 4)
        Column ``k`` is the state of ``phi_{k+1}`` at ``x = 1``.
    """

    lam: float
    g_coefficients: np.ndarray
    at1: np.ndarray

    @property
    def at0(self):
        return self.g_coefficients

    def phi(self, k: int, order: int, end: int) -> float:
        """``phi_k^{(order)}(end)`` with 1-based ``k`` and ``end`` in {0, 1}."""
        data = self.at0 if end == 0 else self.at1
        return float(data[order, k - 1])

    @property
    def boundary_data(self):
        """``{k: (state at 0, state at 1)}``."""
        return {k + 1: (self.at0[:, k].copy(), self.at1[:, k].copy()) for k in range(4)}

    def phi0(self, end: int = 1):
        """``[[phi1'(end), phi2'(end)], [phi1'''(end), phi2'''(end)]]``."""
        d = self.at0 if end == 0 else self.at1
        return np.array([[d[1, 0], d[1, 1]], [d[3, 0], d[3, 1]]])


def _hinged_system(M):
    M = np.asarray(M)
    B = np.zeros(M.shape)
    B[..., 0, 0] = 1.0
    B[..., 1, 2] = 1.0
    B[..., 2, :] = M[..., 0, :]
    B[..., 3, :] = M[..., 2, :]
    return B


def phi_coefficients(M):
    """g-basis coefficients of the phi-basis, batched over leading axes.

    No singularity check; callers screen Dirichlet eigenvalues first.
    """
    B = _hinged_system(M)
    eye = np.broadcast_to(np.eye(4), B.shape)
    return np.linalg.solve(B, eye)


def phi_basis_from_monodromy(M, lam, threshold=DIRICHLET_THRESHOLD) -> PhiBasis:
    rel = float(relative_dirichlet_indicator(M))
    if rel < threshold:
        raise SingularBasisError(lam, rel)
    C = phi_coefficients(M)
    return PhiBasis(lam=float(lam), g_coefficients=C, at1=np.asarray(M) @ C)


def phi_basis(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> PhiBasis:
    """Build the phi-basis by a 4x4 linear solve in the g-basis.

    Raises
    ------
    SingularBasisError
        ``lam`` is a Dirichlet-type eigenvalue.
    """
    return phi_basis_from_monodromy(monodromy(q, lam, tol), lam)


# --- identities for even potentials ----------------------------------------

def phi_symmetry_residuals(pb: PhiBasis) -> dict:
    """Residuals of the ten reflection identities of the phi-basis."""
    p = pb.phi
    return {
        "phi3'(1)=-phi1'(0)": p(3, 1, 1) + p(1, 1, 0),
        "phi3'(0)=-phi1'(1)": p(3, 1, 0) + p(1, 1, 1),
        "phi3'''(1)=-phi1'''(0)": p(3, 3, 1) + p(1, 3, 0),
        "phi3'''(0)=-phi1'''(1)": p(3, 3, 0) + p(1, 3, 1),
        "phi2'''(0)=phi1'(0)": p(2, 3, 0) - p(1, 1, 0),
        "phi4'(1)=-phi2'(0)": p(4, 1, 1) + p(2, 1, 0),
        "phi4'(0)=-phi2'(1)": p(4, 1, 0) + p(2, 1, 1),
        "phi4'''(1)=-phi2'''(0)": p(4, 3, 1) + p(2, 3, 0),
        "phi4'''(0)=-phi2'''(1)": p(4, 3, 0) + p(2, 3, 1),
        "phi2'''(1)=phi1'(1)": p(2, 3, 1) - p(1, 1, 1),
    }


def g_symmetry_residuals(M) -> dict:
    """Residuals of the identities among ``g_k^{(j)}(1)`` for even potentials.

    ``g2'(1)`` pairs with ``g3''(1)``; both equal the (2, 2) entry of the
    discriminant matrix.
    """
    g = lambda k, j: float(M[j, k - 1])
    return {
        "g1''(1)=g2'''(1)": g(1, 2) - g(2, 3),
        "g1'(1)=g3'''(1)": g(1, 1) - g(3, 3),
        "g1(1)=g4'''(1)": g(1, 0) - g(4, 3),
        "g2'(1)=g3''(1)": g(2, 1) - g(3, 2),
        "g2(1)=g4''(1)": g(2, 0) - g(4, 2),
        "g3(1)=g4'(1)": g(3, 0) - g(4, 1),
    }


def _d_phi(pb, f, g):
    # D(f, g) = f'(0) g'''(1) - g'(1) f'''(0)
    return pb.phi(f, 1, 0) * pb.phi(g, 3, 1) - pb.phi(g, 1, 1) * pb.phi(f, 3, 0)


def g_from_phi(pb: PhiBasis):
    """Rebuild the g-basis from the phi-basis by the reflection formulas.

    Returns ``(at0, at1)``: 4x4 arrays whose column ``k`` is the state of
    ``g_{k+1}`` at each end.  ``at0`` should be the identity and ``at1``
    the monodromy matrix.
    """
    det = np.linalg.det(pb.phi0(1))
    p1, p2, p3, p4 = (np.stack([pb.at0[:, k], pb.at1[:, k]]) for k in range(4))
    g1 = p1 + (_d_phi(pb, 1, 2) * p3 - _d_phi(pb, 1, 1) * p4) / det
    g2 = -(pb.phi(1, 1, 1) * p3 - pb.phi(1, 3, 1) * p4) / det
    g3 = p2 + (_d_phi(pb, 2, 2) * p3 - _d_phi(pb, 2, 1) * p4) / det
    g4 = (pb.phi(2, 1, 1) * p3 - pb.phi(1, 1, 1) * p4) / det
    stacked = np.stack([g1, g2, g3, g4], axis=-1)
    return stacked[0], stacked[1]


def phi12_from_g(M):
    """``phi_1`` and ``phi_2`` from the g-basis via the hinged determinants
    ``D~(f, g) = f(1) g''(1) - g(1) f''(1)``.

    Returns a 4x2 array of g-basis coefficients.
    """
    M = np.asarray(M)
    dt = lambda f, g: M[0, f - 1] * M[2, g - 1] - M[0, g - 1] * M[2, f - 1]
    d24 = dt(2, 4)
    out = np.zeros((4, 2))
    out[0, 0] = 1.0
    out[1, 0] = dt(4, 1) / d24
    out[3, 0] = dt(1, 2) / d24
    out[2, 1] = 1.0
    out[1, 1] = dt(4, 3) / d24
    out[3, 1] = dt(3, 2) / d24
    return out


def round_trip_residual(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL) -> float:
    """Max error of g -> phi -> g on boundary data.

    ``phi_1, phi_2`` come from the g-basis closed formulas, ``phi_3, phi_4``
    from the linear solve; the reflection formulas then rebuild the
    g-basis, which must reproduce the identity at 0 and ``M`` at 1.
    """
    M = np.asarray(monodromy(q, lam, tol))
    pb = phi_basis_from_monodromy(M, lam)
    C = pb.g_coefficients.copy()
    C[:, :2] = phi12_from_g(M)
    rebuilt = PhiBasis(lam=pb.lam, g_coefficients=C, at1=M @ C)
    at0, at1 = g_from_phi(rebuilt)
    scale = max(1.0, np.abs(M).max())
    return float(max(np.abs(at0 - np.eye(4)).max(), np.abs(at1 - M).max() / scale))


def g0_from_monodromy(M):
    """``[[g1(1), g3(1)], [g1''(1), g3''(1)]]``, batched over leading axes."""
    M = np.asarray(M)
    return np.stack([np.stack([M[..., 0, 0], M[..., 0, 2]], -1),
                     np.stack([M[..., 2, 0], M[..., 2, 2]], -1)], -2)
