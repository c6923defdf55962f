"""Lattices with perturbed joint angles ``delta0 + c_j eps``.

The Floquet problem reduces to a 4x4 system for the unknowns
``(A, B~, C, D~)`` of the phi-basis ansatz on the three edges of the cell;
its determinant is expanded as ``d0 + eps d1 + O(eps^2)``.  The exact
assembly is kept alongside the expansion so every first-order statement
can be checked against it, and a direct 12x12 Floquet matrix in the
g-basis gives a second, independent route to the same variety.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edge import (DEFAULT_TOL, DIRICHLET_THRESHOLD, monodromy, monodromy_batch,
                   g0_from_monodromy, phi12_from_g, phi_basis_from_monodromy,
                   phi_coefficients, relative_dirichlet_indicator)
from .errors import DomainError, SingularBasisError
from .graphene import DELTA0, Quasimomentum, THETA_STAR, s0, s0_norm, _thetas
from .lyapunov import t1_t2
from .potential import PeriodicPotential
from .roots import refine_brackets

EPS_CAP = math.pi / 6.0


@dataclass(frozen=True)
class PerturbationConfig:
    """Angle perturbation ``delta_j = delta0 + c_j eps`` with
    ``c = (1, c1, -(1 + c1))``."""

    epsilon: float = 0.0
    c1: float = 0.0

    def __post_init__(self):
        if not abs(self.epsilon) < EPS_CAP:
            raise DomainError(f"|epsilon|={abs(self.epsilon)!r} must be below pi/6")
        if not -1.0 <= self.c1 <= 1.0:
            raise DomainError(f"c1={self.c1!r} outside [-1, 1]")

    @property
    def c2(self) -> float:
        return -(1.0 + self.c1)

    @property
    def delta0(self) -> float:
        return DELTA0

    @property
    def coefficients(self):
        return (1.0, self.c1, self.c2)

    def angles(self):
        return tuple(DELTA0 + c * self.epsilon for c in self.coefficients)

    def weights(self):
        """``sin(delta_j) / sin(delta0)``."""
        return np.array([math.sin(a) / math.sin(DELTA0) for a in self.angles()])

    def with_epsilon(self, eps):
        return PerturbationConfig(eps, self.c1)


def s_k_eps(k: int, theta, config: PerturbationConfig):
    """``sum_j sigma_j^k exp(-i theta_j)`` with ``theta_0 = 0`` and
    ``sigma_j = sin(delta_j) / sin(delta0)``; vectorized over theta."""
    if k < 0:
        raise ValueError("k must be non-negative")
    t1, t2 = _thetas(theta)
    w = config.weights() ** k
    return w[0] + w[1] * np.exp(-1j * t1) + w[2] * np.exp(-1j * t2)


def s1(theta, config: PerturbationConfig):
    """First-order coefficient: ``S_k = s0 + k eps s1 + O(eps^2)``."""
    t1, t2 = _thetas(theta)
    cot = math.cos(DELTA0) / math.sin(DELTA0)
    return cot * (1.0 + config.c1 * np.exp(-1j * t1) + config.c2 * np.exp(-1j * t2))


def re_s0_s1(theta, config: PerturbationConfig):
    """``Re(s0 conj(s1)) = -cot(delta0) (cos(t2 - t1) + c1 cos t2 + c2 cos t1)``."""
    t1, t2 = _thetas(theta)
    cot = math.cos(DELTA0) / math.sin(DELTA0)
    v = -cot * (np.cos(t2 - t1) + config.c1 * np.cos(t2) + config.c2 * np.cos(t1))
    return float(v) if np.ndim(v) == 0 else v


# --- the G1 matrix -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class G1Matrix:
    """``Phi0(1)^-1 Phi1(1)`` with ``Phi1(1) = [[phi1'(1), 2 phi2'(1)], [0, phi2'''(1)]]``."""

    lam: float
    entries: np.ndarray
    phi0: np.ndarray
    phi1: np.ndarray


def _phi_mats(at1):
    at1 = np.asarray(at1)
    p0 = np.stack([np.stack([at1[..., 1, 0], at1[..., 1, 1]], -1),
                   np.stack([at1[..., 3, 0], at1[..., 3, 1]], -1)], -2)
    zero = np.zeros_like(at1[..., 1, 0])
    p1 = np.stack([np.stack([at1[..., 1, 0], 2.0 * at1[..., 1, 1]], -1),
                   np.stack([zero, at1[..., 3, 1]], -1)], -2)
    return p0, p1


def g1_matrix(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL,
              route: str = "phi") -> G1Matrix:
    """``G1 = Phi0(1)^-1 Phi1(1)``.

    ``route="phi"`` takes phi_1, phi_2 from the 4x4 linear solve,
    ``route="g"`` from their closed expressions in the g-basis.

    Raises
    ------
    SingularBasisError
        ``lam`` is a hinged-edge eigenvalue.
    """
    M = np.asarray(monodromy(q, lam, tol))
    pb = phi_basis_from_monodromy(M, lam)
    if route == "phi":
        at1 = pb.at1
    elif route == "g":
        at1 = M @ np.column_stack([phi12_from_g(M), pb.g_coefficients[:, 2:]])
    else:
        raise ValueError(f"unknown route {route!r}")
    p0, p1 = _phi_mats(at1)
    return G1Matrix(float(lam), np.linalg.solve(p0, p1), p0, p1)


def capital_g(q: PeriodicPotential, lam: float, tol: float = DEFAULT_TOL,
              route: str = "phi") -> float:
    """``-1/2 {(1 - (G0^2)_22) L11 + (1 - (G0^2)_11) L22 + (G0^2)_21 L12 + (G0^2)_12 L21}``
    with ``L = G1``.

    This is the factored first-order coefficient in its published form;
    :func:`d1_factored` builds ``d1`` from it.  :func:`det_expansion`
    does not use it (see :func:`d1_factored`).
    """
    M = monodromy(q, lam, tol)
    G2 = g0_from_monodromy(M) @ g0_from_monodromy(M)
    L = g1_matrix(q, lam, tol, route).entries
    return float(-0.5 * ((1 - G2[1, 1]) * L[0, 0] + (1 - G2[0, 0]) * L[1, 1]
                         + G2[1, 0] * L[0, 1] + G2[0, 1] * L[1, 0]))


def d1_factored(q, lam, theta, config, tol=DEFAULT_TOL) -> float:
    """``-(4 |s0|^2 / 9) Re(s0 conj s1) G(lam)``.

    Kept for comparison only: it agrees with the true derivative of the
    exact determinant only where ``Re(s0 conj s1) = 0``.
    """
    return float(-4.0 * s0_norm(theta) ** 2 / 9.0 * re_s0_s1(theta, config)
                 * capital_g(q, lam, tol))


# --- exact assembly ------------------------------------------------------------

def _m_eps_from_phi(at0, at1, theta, config):
    """Normalized 4x4 assembly, batched over a leading axis of phi data."""
    at0 = np.asarray(at0)
    at1 = np.asarray(at1)
    zero = np.zeros(2)
    S = {(k, "t"): s_k_eps(k, theta, config) for k in range(3)}
    S.update({(k, "0"): s_k_eps(k, zero, config) for k in range(3)})
    p = lambda d, j, k: d[..., j, k - 1]
    r1 = [S[1, "0"] * p(at0, 1, 1), S[2, "0"] * p(at0, 1, 2),
          S[1, "t"] * p(at0, 1, 3), S[2, "t"] * p(at0, 1, 4)]
    r2 = [S[0, "0"] * p(at0, 3, 1), S[1, "0"] * p(at0, 3, 2),
          S[0, "t"] * p(at0, 3, 3), S[1, "t"] * p(at0, 3, 4)]
    r3 = [-np.conj(S[1, "t"]) * p(at1, 1, 1), -np.conj(S[2, "t"]) * p(at1, 1, 2),
          -S[1, "0"] * p(at1, 1, 3), -S[2, "0"] * p(at1, 1, 4)]
    r4 = [-np.conj(S[0, "t"]) * p(at1, 3, 1), -np.conj(S[1, "t"]) * p(at1, 3, 2),
          -S[0, "0"] * p(at1, 3, 3), -S[1, "0"] * p(at1, 3, 4)]
    raw = np.stack([np.stack(np.broadcast_arrays(*r), -1) for r in (r1, r2, r3, r4)], -2)
    p0, _ = _phi_mats(at1)
    inv = np.linalg.inv(p0)
    out = np.empty(raw.shape, dtype=complex)
    out[..., :2, :] = inv @ raw[..., :2, :]
    out[..., 2:, :] = inv @ raw[..., 2:, :]
    return out / 3.0


def assemble_m_eps(q: PeriodicPotential, lam: float, theta, config: PerturbationConfig,
                   tol: float = DEFAULT_TOL):
    """Exact (in eps) normalized Floquet assembly and its determinant.

    Rows are the derivative joint conditions at ``x = 0`` and ``x = 1``,
    each pair premultiplied by ``Phi0(1)^-1`` and divided by 3; columns
    are the unknowns ``(A, B~, C, D~)``.

    Returns
    -------
    matrix : ndarray (4, 4) complex
    det : complex
    """
    M = np.asarray(monodromy(q, lam, tol))
    pb = phi_basis_from_monodromy(M, lam)
    m = _m_eps_from_phi(pb.at0, pb.at1, theta, config)
    return m, complex(np.linalg.det(m))


def det_m_eps_batch(q, lams, theta, config, tol=DEFAULT_TOL):
    """Real part of ``det M_eps`` on many energies (NaN on hinged-edge
    eigenvalues).  The determinant is real up to round-off."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    M = monodromy_batch(q, lams, tol)
    ok = relative_dirichlet_indicator(M) >= DIRICHLET_THRESHOLD
    re = np.full(lams.shape, np.nan)
    im = np.full(lams.shape, np.nan)
    if ok.any():
        th = np.asarray(theta, dtype=float) if not isinstance(theta, Quasimomentum) \
            else theta.as_array()
        if th.ndim == 2:
            th = th[ok]
        C = phi_coefficients(M[ok])
        d = np.linalg.det(_m_eps_from_phi(C, M[ok] @ C, th, config))
        re[ok], im[ok] = d.real, d.imag
    return re, im


# --- first-order expansion -----------------------------------------------------

def _expansion_parts(q, lam, tol):
    M = monodromy(q, lam, tol)
    G0 = g0_from_monodromy(M)
    G2 = G0 @ G0
    L = g1_matrix(q, lam, tol).entries
    adj = np.array([[G2[1, 1], -G2[0, 1]], [-G2[1, 0], G2[0, 0]]])
    return G0, G2, L, adj


def det_expansion(q: PeriodicPotential, lam: float, theta, config: PerturbationConfig,
                  tol: float = DEFAULT_TOL):
    """``(d0, d1)`` with ``det M_eps = d0 + eps d1 + O(eps^2)``.

    ``d0 = c^4 - c^2 tr(G0^2) + det(G0^2)`` with ``c = |s0|/3``, and
    ``d1 = (2/9) Re(s0 conj s1) [c^2 tr(G1) - tr(adj(G0^2) G1)]``, which
    follows from differentiating the exact assembly at ``eps = 0``.
    """
    G0, G2, L, adj = _expansion_parts(q, lam, tol)
    c2 = (s0_norm(theta) / 3.0) ** 2
    d0 = c2 ** 2 - c2 * np.trace(G2) + np.linalg.det(G2)
    R = re_s0_s1(theta, config)
    d1 = 2.0 / 9.0 * R * (c2 * np.trace(L) - np.trace(adj @ L))
    return float(d0), float(d1)


@dataclass(frozen=True)
class PerturbedLyapunov:
    """First-order perturbed Lyapunov pair at one ``(lam, theta)``.

    ``delta*_eps`` are ``None`` where ``T2_eps < 0``; ``defined`` is False
    where a radicand is negative.
    """

    lam: float
    t1_eps: float | None
    t2_eps: float | None
    delta1_eps: float | None
    delta2_eps: float | None
    theta: Quasimomentum
    config: PerturbationConfig
    defined: bool = True

    def dispersion_gap(self) -> float | None:
        """``min_k min_+- |Delta_k^eps -+ |s0|/3|``: zero on the perturbed variety."""
        if self.delta1_eps is None:
            return None
        c = s0_norm((self.theta.theta1, self.theta.theta2)) / 3.0
        return min(abs(d - s * c) for d in (self.delta1_eps, self.delta2_eps)
                   for s in (1, -1))


def perturbed_coefficients(q, lam, tol=DEFAULT_TOL):
    """``(alpha, beta)`` in ``tr' = tr(G0^2) + eps R alpha`` and
    ``det' = det(G0^2) + eps R beta``."""
    _, _, L, adj = _expansion_parts(q, lam, tol)
    return -2.0 / 9.0 * float(np.trace(L)), -2.0 / 9.0 * float(np.trace(adj @ L))


def perturbed_delta(q: PeriodicPotential, lam: float, theta, config: PerturbationConfig,
                    tol: float = DEFAULT_TOL) -> PerturbedLyapunov:
    """Perturbed pair ``(T1^eps, T2^eps)`` to first order in eps.

    The expansion makes ``det M_eps = c^4 - c^2 tr' + det'`` with ``tr'``
    and ``det'`` shifted by ``eps R alpha`` and ``eps R beta``, where
    ``R = Re(s0 conj s1)``.  Its roots in ``c^2`` are ``(Delta^eps)^2``, so
    ``(T1^eps)^2 = (tr'/2 + s sqrt(det'))/2`` and
    ``T2^eps = (tr'/2 - s sqrt(det'))/2`` with ``s = sign det G0``.
    ``T1^eps`` is the principal root; membership tests use both signs.
    """
    th = theta if isinstance(theta, Quasimomentum) else Quasimomentum(*theta)
    M = monodromy(q, lam, tol)
    if relative_dirichlet_indicator(M) < DIRICHLET_THRESHOLD:
        raise SingularBasisError(lam)
    G0 = g0_from_monodromy(M)
    G2 = G0 @ G0
    alpha, beta = perturbed_coefficients(q, lam, tol)
    R = re_s0_s1((th.theta1, th.theta2), config)
    eps = config.epsilon
    tr_p = float(np.trace(G2)) + eps * R * alpha
    det_p = float(np.linalg.det(G2)) + eps * R * beta
    s = 1.0 if np.linalg.det(G0) >= 0 else -1.0
    if det_p < 0:
        return PerturbedLyapunov(float(lam), None, None, None, None, th, config, False)
    t1sq = 0.5 * (0.5 * tr_p + s * math.sqrt(det_p))
    t2 = 0.5 * (0.5 * tr_p - s * math.sqrt(det_p))
    if t1sq < 0:
        return PerturbedLyapunov(float(lam), None, t2, None, None, th, config, False)
    t1 = math.sqrt(t1sq)
    if t2 < 0:
        return PerturbedLyapunov(float(lam), t1, t2, None, None, th, config)
    r = math.sqrt(t2)
    return PerturbedLyapunov(float(lam), t1, t2, t1 + r, t1 - r, th, config)


def perturbed_delta_slope(q, lam, theta, config, tol=DEFAULT_TOL):
    """``d(T1^eps)/d eps`` and ``d(T2^eps)/d eps`` at ``eps = 0``.

    With ``D = det G0``: ``d(T1^2) = R (alpha/4 + beta/(4D))`` and
    ``dT2 = R (alpha/4 - beta/(4D))``.
    """
    M = monodromy(q, lam, tol)
    G0 = g0_from_monodromy(M)
    t1, _ = t1_t2(G0)
    D = float(np.linalg.det(G0))
    alpha, beta = perturbed_coefficients(q, lam, tol)
    R = re_s0_s1(theta, config)
    dt1sq = R * (alpha / 4.0 + beta / (4.0 * D))
    dt2 = R * (alpha / 4.0 - beta / (4.0 * D))
    return dt1sq / (2.0 * abs(float(t1))), dt2


# --- independent 12x12 route ---------------------------------------------------

def floquet_matrix(q: PeriodicPotential, lam: float, theta, config: PerturbationConfig,
                   tol: float = DEFAULT_TOL):
    """Joint conditions of the three-edge cell written in the g-basis.

    Unknowns are the 4 g-coefficients of each edge (12 in all); rows are
    the 6 joint conditions at the ``x = 0`` vertex and the 6 at the
    ``x = 1`` vertex with Floquet phases.  Nontrivial kernel iff ``lam``
    is in the spectrum of the Bloch operator at ``theta``.
    """
    M = np.asarray(monodromy(q, lam, tol))
    t1, t2 = _thetas(theta)
    ph = np.array([1.0, np.exp(1j * t1), np.exp(1j * t2)])
    w = np.array([math.sin(a) for a in config.angles()])
    F = np.zeros((12, 12), dtype=complex)

    def block(row, edge, vec):
        F[row, 4 * edge:4 * edge + 4] += vec

    I = np.eye(4)
    for end, base, states in ((0, 0, [I] * 3), (1, 6, [M * p for p in ph])):
        st = states
        block(base + 0, 0, st[0][0]); block(base + 0, 1, -st[1][0])
        block(base + 1, 1, st[1][0]); block(base + 1, 2, -st[2][0])
        for e in range(3):
            block(base + 2, e, w[e] * st[e][1])
            block(base + 5, e, st[e][3])
        block(base + 3, 0, st[0][2] / w[0]); block(base + 3, 1, -st[1][2] / w[1])
        block(base + 4, 1, st[1][2] / w[1]); block(base + 4, 2, -st[2][2] / w[2])
    return F


def floquet_singularity(q, lam, theta, config, tol=DEFAULT_TOL) -> float:
    """``sigma_min / sigma_max`` of the row-normalized 12x12 matrix."""
    F = floquet_matrix(q, lam, theta, config, tol)
    F = F / np.linalg.norm(F, axis=1, keepdims=True)
    s = np.linalg.svd(F, compute_uv=False)
    return float(s[-1] / s[0])


def vertex_condition_residual(q, lam, theta, config, tol=DEFAULT_TOL) -> float:
    """Joint-condition residual of the ansatz built from the kernel of
    ``M_eps``.

    The null vector ``(A, B~, C, D~)`` is spread over the three edges as
    ``u_j = A phi1 + B~ sigma_j phi2 + C e^{-i theta_j} phi3
    + D~ sigma_j e^{-i theta_j} phi4``; the twelve joint conditions are
    evaluated and their largest modulus returned (unit null vector).
    """
    m, _ = assemble_m_eps(q, lam, theta, config, tol)
    _, _, vh = np.linalg.svd(m)
    xi = vh[-1].conj()
    pb = phi_basis_from_monodromy(np.asarray(monodromy(q, lam, tol)), lam)
    t1, t2 = _thetas(theta)
    phase = np.array([1.0, np.exp(-1j * t1), np.exp(-1j * t2)])
    sig = config.weights()
    coef = np.stack([np.array([xi[0], xi[1] * sig[j], xi[2] * phase[j],
                               xi[3] * sig[j] * phase[j]]) for j in range(3)])
    st0 = coef @ pb.at0.T        # (edge, derivative order)
    st1 = coef @ pb.at1.T
    w = sig
    back = np.conj(phase)        # e^{+i theta_j}
    res = []
    for st, ph in ((st0, np.ones(3)), (st1, back)):
        u = st * ph[:, None]
        res += [u[0, 0] - u[1, 0], u[1, 0] - u[2, 0], np.sum(w * u[:, 1]),
                u[0, 2] / w[0] - u[1, 2] / w[1], u[1, 2] / w[1] - u[2, 2] / w[2],
                np.sum(u[:, 3])]
    return float(np.max(np.abs(res)))


# --- roots of the exact determinant --------------------------------------------

def _theta_rows(thetas):
    if isinstance(thetas, Quasimomentum):
        return thetas.as_array()[None, :]
    return np.atleast_2d(np.asarray(thetas, dtype=float))


def expansion_table(q, lams, tol=DEFAULT_TOL):
    """Theta-free ingredients of ``d0`` and ``d1`` on many energies.

    Returns ``(tr G0^2, det G0^2, tr G1, tr(adj(G0^2) G1))`` as arrays,
    NaN on hinged-edge eigenvalues.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    M = monodromy_batch(q, lams, tol)
    ok = relative_dirichlet_indicator(M) >= DIRICHLET_THRESHOLD
    out = [np.full(lams.shape, np.nan) for _ in range(4)]
    if ok.any():
        Mk = M[ok]
        G0 = g0_from_monodromy(Mk)
        G2 = G0 @ G0
        p0, p1 = _phi_mats(Mk @ phi_coefficients(Mk))
        L = np.linalg.solve(p0, p1)
        adj = np.empty_like(G2)
        adj[:, 0, 0], adj[:, 1, 1] = G2[:, 1, 1], G2[:, 0, 0]
        adj[:, 0, 1], adj[:, 1, 0] = -G2[:, 0, 1], -G2[:, 1, 0]
        out[0][ok] = np.trace(G2, axis1=1, axis2=2)
        out[1][ok] = np.linalg.det(G2)
        out[2][ok] = np.trace(L, axis1=1, axis2=2)
        out[3][ok] = np.trace(adj @ L, axis1=1, axis2=2)
    return tuple(out)


def first_order_det_batch(q, lams, theta, config, tol=DEFAULT_TOL):
    """``d0 + eps d1`` on many energies; ``theta`` is one quasimomentum or
    one per energy."""
    tr2, det2, trl, tral = expansion_table(q, lams, tol)
    c2 = (s0_norm(theta) / 3.0) ** 2
    R = re_s0_s1(theta, config)
    return c2 ** 2 - c2 * tr2 + det2 + config.epsilon * 2.0 / 9.0 * R * (c2 * trl - tral)


def _values_on_grid(q, pts, th, config, tol, order, chunk=200_000):
    """Real determinant (exact or first order) on ``theta rows x pts``."""
    V = np.full((len(th), pts.size), np.nan)
    if order == "first":
        tr2, det2, trl, tral = expansion_table(q, pts, tol)
        c2 = (s0_norm(th) / 3.0)[:, None] ** 2
        R = re_s0_s1(th, config)[:, None]
        return c2 ** 2 - c2 * tr2 + det2 + config.epsilon * 2.0 / 9.0 * R * (c2 * trl - tral)
    M = monodromy_batch(q, pts, tol)
    ok = relative_dirichlet_indicator(M) >= DIRICHLET_THRESHOLD
    if not ok.any():
        return V
    C = phi_coefficients(M[ok])
    at1 = M[ok] @ C
    step = max(1, chunk // int(ok.sum()))
    for s in range(0, len(th), step):
        part = th[s:s + step, None, :]
        d = np.linalg.det(_m_eps_from_phi(C[None], at1[None], part, config))
        V[s:s + step, ok] = d.real
    return V


def perturbed_roots_many(q, thetas, config: PerturbationConfig, lambda_window, grid: int,
                         tol: float = DEFAULT_TOL, root_tol: float = 1e-10,
                         accept: float = 1e-9, order: str = "exact"):
    """Real lambda-roots of the perturbed determinant for many quasimomenta.

    ``order="exact"`` uses ``det M_eps``; ``order="first"`` uses
    ``d0 + eps d1``.  The determinant is tabulated on the grid for every
    quasimomentum, sign changes are refined in one batched solve, and a
    root is kept when ``|det|`` there is below ``accept`` times the median
    ``|det|`` on its grid neighborhood, which discards sign changes
    through poles.

    Returns
    -------
    list of list of float
        Sorted roots per quasimomentum.
    """
    if order not in ("exact", "first"):
        raise ValueError(f"unknown order {order!r}")
    lo, hi = map(float, lambda_window)
    pts = np.linspace(lo, hi, grid)
    th = _theta_rows(thetas)
    V = _values_on_grid(q, pts, th, config, tol, order)
    with np.errstate(invalid="ignore"):
        ti, br = np.nonzero(V[:, :-1] * V[:, 1:] < 0)
    out = [[] for _ in range(len(th))]
    if ti.size == 0:
        return out
    fn = det_m_eps_batch if order == "exact" else first_order_det_batch

    def f(x, t1, t2):
        val = fn(q, x, np.stack([t1, t2], -1), config, tol)
        return val[0] if order == "exact" else val

    args = (th[ti, 0], th[ti, 1])
    roots = refine_brackets(f, pts[br], pts[br + 1], root_tol, args=args)
    good = np.isfinite(roots)
    ti, br, roots = ti[good], br[good], roots[good]
    args = (args[0][good], args[1][good])
    vals = np.abs(f(roots, *args))
    for t, r, v, i in zip(ti, roots, vals, br):
        nb = np.abs(V[t, max(0, i - 2):i + 4])
        scale = np.nanmedian(nb) if np.any(np.isfinite(nb)) else 1.0
        if v <= accept * max(scale, 1e-300) or v < 1e-14:
            out[t].append(float(r))
    return [sorted(r) for r in out]


def exact_perturbed_roots(q: PeriodicPotential, theta, config: PerturbationConfig,
                          lambda_window, grid: int, tol: float = DEFAULT_TOL,
                          root_tol: float = 1e-10, accept: float = 1e-9):
    """Real lambda-roots of ``det M_eps`` in the window at one quasimomentum.

    See :func:`perturbed_roots_many` for the acceptance rule.
    """
    return perturbed_roots_many(q, [_thetas(theta)], config, lambda_window, grid,
                                tol, root_tol, accept)[0]


def first_order_perturbed_roots(q: PeriodicPotential, theta, config: PerturbationConfig,
                                lambda_window, grid: int, tol: float = DEFAULT_TOL,
                                root_tol: float = 1e-10):
    """Real lambda-roots of ``d0 + eps d1`` at one quasimomentum."""
    return perturbed_roots_many(q, [_thetas(theta)], config, lambda_window, grid,
                                tol, root_tol, order="first")[0]


# --- Dirac persistence -----------------------------------------------------------

@dataclass(frozen=True)
class PersistenceReport:
    lambda_star: float
    roots_at_theta_star: tuple
    crossing_offset: float        # max distance of the two nearest roots from lambda*
    radii: tuple
    separations: tuple            # min sheet separation on each circle
    center: tuple                 # circle centre used


def _two_nearest(roots, lam):
    r = sorted(roots, key=lambda x: abs(x - lam))[:2]
    return sorted(r)


def sheet_separation(q, theta, config, lambda_star, half_width, grid, tol=DEFAULT_TOL):
    """Gap between the two exact roots nearest ``lambda_star`` (inf if fewer)."""
    r = exact_perturbed_roots(q, theta, config,
                              (max(lambda_star - half_width, 1e-9), lambda_star + half_width),
                              grid, tol)
    if len(r) < 2:
        return math.inf
    a, b = _two_nearest(r, lambda_star)
    return b - a


def dirac_persistence_check(q: PeriodicPotential, config: PerturbationConfig, dirac,
                            radii=(1e-2, 5e-3), n_angles: int = 36,
                            half_width: float = 1.0, grid: int = 121,
                            center=None, tol: float = DEFAULT_TOL) -> PersistenceReport:
    """Probe the exact perturbed sheets near a graphene Dirac point.

    Reports the two exact roots at ``theta*`` (their distance from
    ``lambda*`` is the crossing offset) and, for each radius, the minimum
    sheet separation on a circle of that radius around ``center``
    (``theta*`` by default).  A surviving cone shows separations shrinking
    linearly with the radius.
    """
    lam = dirac.lambda_star
    th = np.asarray(center, dtype=float) if center is not None else dirac.theta_star.as_array()
    at = exact_perturbed_roots(q, th, config, (max(lam - half_width, 1e-9), lam + half_width),
                               grid, tol)
    near = _two_nearest(at, lam) if at else []
    offset = max((abs(r - lam) for r in near), default=math.inf)
    if len(near) < 2:
        offset = math.inf if not near else offset
    seps = []
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    for rho in radii:
        best = math.inf
        for a in angles:
            p = th + rho * np.array([math.cos(a), math.sin(a)])
            best = min(best, sheet_separation(q, p, config, lam, half_width, grid, tol))
        seps.append(best)
    return PersistenceReport(lam, tuple(near), offset, tuple(radii), tuple(seps),
                             tuple(float(v) for v in th))


def locate_conical_point(q, config, dirac, search=0.06, half_width=1.0, grid=121,
                         tol=DEFAULT_TOL):
    """Quasimomentum near ``theta*`` where the two exact sheets touch.

    Minimizes the sheet separation with Nelder-Mead from the best point
    of a coarse grid.  Returns ``(theta, separation, roots)``.
    """
    from scipy.optimize import minimize

    lam = dirac.lambda_star
    t0 = dirac.theta_star.as_array()

    def sep(t):
        s = sheet_separation(q, t, config, lam, half_width, grid, tol)
        return 10.0 if not math.isfinite(s) else s

    g = np.linspace(-search, search, 13)
    best = min((sep(t0 + np.array([a, b])), a, b) for a in g for b in g)
    res = minimize(sep, t0 + np.array(best[1:]), method="Nelder-Mead",
                   options=dict(xatol=1e-9, fatol=1e-12, maxiter=400))
    roots = exact_perturbed_roots(q, res.x, config, (lam - half_width, lam + half_width),
                                  grid, tol)
    return res.x, float(res.fun), roots
