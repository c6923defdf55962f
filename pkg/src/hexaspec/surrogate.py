"""Piecewise Chebyshev surrogate for the monodromy matrix on a lambda window.

Every entry of ``M(lambda)`` is an entire function of lambda, so a modest
Chebyshev degree per piece reproduces direct integration to the
integrator's own accuracy.  Large sweeps (thousands of quasimomenta, each
with its own root refinements) evaluate the surrogate instead of
re-integrating the edge equation at every iterate.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .errors import NumericalFailure
from .ode import integrate_monodromy

_PROBES = np.array([0.13, 0.37, 0.5, 0.71, 0.93])


class MonodromySurrogate:
    """Interpolated ``M(lambda)`` (and ``dM/dlambda``) on ``[lo, hi]``.

    A piece is accepted when its last three Chebyshev coefficients are
    below ``tol`` times the smallest ``max(1, |M|)`` on its nodes and the
    interpolant matches direct integration at five off-node probes within
    ``10 tol max(1, |M|)``; otherwise it is halved.  Energies outside the
    window fall back to direct integration; NaN energies give NaN.

    Parameters
    ----------
    potential : PeriodicPotential
    window : (float, float)
    tol : float
        Integrator tolerance used for the nodes and the probes.
    degree : int
        Polynomial degree per piece.
    max_pieces : int
        Failure threshold for the adaptive splitting.

    Attributes
    ----------
    breaks : ndarray
        Piece boundaries.
    max_error : float
        Largest scaled probe error over the accepted pieces.
    """

    def __init__(self, potential, window, tol=1e-10, degree=24, max_pieces=256):
        lo, hi = map(float, window)
        if not hi > lo:
            raise ValueError("empty window")
        self.potential = potential
        self.window = (lo, hi)
        self.tol = float(tol)
        self.degree = int(degree)
        nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))

        pending = [(lo, hi)]
        done = []
        self.max_error = 0.0
        while pending:
            if len(done) + len(pending) > max_pieces:
                raise NumericalFailure(
                    f"monodromy surrogate needs more than {max_pieces} pieces on {window}")
            a = np.array([p[0] for p in pending])
            b = np.array([p[1] for p in pending])
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            lam_nodes = (mid[:, None] + half[:, None] * nodes).ravel()
            lam_probe = (a[:, None] + (b - a)[:, None] * _PROBES).ravel()
            M, _, _ = integrate_monodromy(potential, np.concatenate([lam_nodes, lam_probe]),
                                          rtol=tol)
            Mn = M[:lam_nodes.size].reshape(len(pending), degree + 1, 16)
            Mp = M[lam_nodes.size:].reshape(len(pending), _PROBES.size, 16)
            nxt = []
            for i, (pa, pb) in enumerate(pending):
                coef = cheb.chebfit(nodes, Mn[i], degree)
                xp = 2.0 * _PROBES - 1.0
                approx = cheb.chebval(xp, coef).T
                scale = np.maximum(1.0, np.abs(Mp[i]).max(axis=1))
                err = float((np.abs(approx - Mp[i]).max(axis=1) / scale).max())
                floor = np.maximum(1.0, np.abs(Mn[i]).max(axis=1)).min()
                tail = float(np.abs(coef[-3:]).max()) / floor
                if err <= 10.0 * tol and tail <= tol:
                    done.append((pa, pb, coef))
                    self.max_error = max(self.max_error, err)
                else:
                    m = 0.5 * (pa + pb)
                    nxt += [(pa, m), (m, pb)]
            pending = nxt
        done.sort(key=lambda p: p[0])
        self.breaks = np.array([p[0] for p in done] + [hi])
        self._coef = [p[2] for p in done]
        self._dcoef = [cheb.chebder(c) * (2.0 / (p[1] - p[0])) for p, c in zip(done, self._coef)]

    @property
    def pieces(self) -> int:
        return len(self._coef)

    def evaluate(self, lams, derivative=False):
        """``M`` of shape ``(n, 4, 4)``, or ``(M, dM)`` when ``derivative``."""
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        M = np.full((lams.size, 16), np.nan)
        dM = np.full((lams.size, 16), np.nan) if derivative else None
        lo, hi = self.window
        inside = (lams >= lo) & (lams <= hi)
        idx = np.clip(np.searchsorted(self.breaks, lams, side="right") - 1, 0, self.pieces - 1)
        for p in np.unique(idx[inside]):
            sel = inside & (idx == p)
            a, b = self.breaks[p], self.breaks[p + 1]
            x = (2.0 * lams[sel] - a - b) / (b - a)
            M[sel] = cheb.chebval(x, self._coef[p]).T
            if derivative:
                dM[sel] = cheb.chebval(x, self._dcoef[p]).T
        out = ~inside & np.isfinite(lams)
        if out.any():
            Mo, dMo, _ = integrate_monodromy(self.potential, lams[out], rtol=self.tol,
                                             derivative=derivative)
            M[out] = Mo.reshape(-1, 16)
            if derivative:
                dM[out] = dMo.reshape(-1, 16)
        M = M.reshape(-1, 4, 4)
        if derivative:
            return M, dM.reshape(-1, 4, 4)
        return M
