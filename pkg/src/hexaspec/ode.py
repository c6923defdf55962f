"""Batched Dormand-Prince 5(4) integration of the companion system.

The edge equation ``u'''' + q(x) u = lam u`` is written as the first-order
system ``Y' = A(x, lam) Y`` with ``Y`` the 4x4 matrix whose columns are the
state vectors ``(u, u', u'', u''')`` of four solutions.  Every energy in a
batch is advanced with its own step size, so a trajectory's result does not
depend on which other energies share the batch.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError, IntegrationError

# Dormand-Prince 5(4) tableau (FSAL: the last stage is the 5th-order solution).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_CHUNK = 512


def worker_count() -> int:
    """Number of worker threads for lambda sweeps (capped by HEXASPEC_THREADS)."""
    env = os.environ.get("HEXASPEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def _rhs(qx, lam, Y, derivative):
    # Y: (n, 4, m).  With derivative=True the last 4 columns carry dY/dlam.
    dY = np.empty_like(Y)
    dY[:, :3, :] = Y[:, 1:, :]
    coef = (lam - qx)[:, None]
    dY[:, 3, :] = coef * Y[:, 0, :]
    if derivative:
        dY[:, 3, 4:] += Y[:, 0, :4]
    return dY


def _initial_step(lam, tol):
    scale = 1.0 + np.abs(lam) ** 0.25
    return np.minimum(0.05, 0.2 * tol ** 0.2 / scale)


def _integrate_chunk(potential, lam, rtol, atol, derivative, nodes):
    n = lam.shape[0]
    m = 8 if derivative else 4
    Y = np.zeros((n, 4, m))
    Y[:, :, :4] = np.eye(4)
    x = np.zeros(n)
    h = _initial_step(lam, rtol)
    node_idx = np.zeros(n, dtype=int)
    samples = None
    if nodes is not None:
        samples = np.zeros((n, len(nodes), 4, m))
        at_start = nodes[0] == 0.0
        if at_start:
            samples[:, 0] = Y
            node_idx[:] = 1
    targets = np.full(n, 1.0) if nodes is None else None

    K = np.empty((7, n, 4, m))
    K[0] = _rhs(potential(x), lam, Y, derivative)
    active = np.ones(n, dtype=bool)
    tiny = 1e-14

    while active.any():
        idx = np.nonzero(active)[0]
        xa = x[idx]
        if nodes is None:
            stop = targets[idx]
        else:
            stop = nodes[np.minimum(node_idx[idx], len(nodes) - 1)]
        ha = np.minimum(h[idx], stop - xa)
        if np.any(ha < tiny * np.maximum(1.0, np.abs(xa))):
            bad = idx[np.argmin(ha)]
            raise IntegrationError(float(lam[bad]), float(x[bad]))
        la = lam[idx]
        Ya = Y[idx]
        Ka = K[:, idx]
        hb = ha[:, None, None]
        for s in range(1, 7):
            acc = Ya.copy()
            for j, a in enumerate(_A[s]):
                if a != 0.0:
                    acc += hb * a * Ka[j]
            Ka[s] = _rhs(potential(xa + _C[s] * ha), la, acc, derivative)
            if s == 6:
                y_new = acc
        err_vec = np.tensordot(_E, Ka, axes=(0, 0)) * hb
        scale = atol + rtol * np.maximum(np.abs(Ya), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2, axis=(1, 2)))
        accept = err <= 1.0
        with np.errstate(divide="ignore"):
            factor = np.where(err == 0.0, _MAX_FACTOR,
                              _SAFETY * err ** -0.2)
        factor = np.clip(factor, _MIN_FACTOR, _MAX_FACTOR)
        factor = np.where(accept, factor, np.minimum(factor, 1.0))

        acc_i = idx[accept]
        if acc_i.size:
            x[acc_i] = xa[accept] + ha[accept]
            Y[acc_i] = y_new[accept]
            K[0, acc_i] = Ka[6, accept]
            reached = np.isclose(x[acc_i], stop[accept], rtol=0.0, atol=1e-15)
            x[acc_i[reached]] = stop[accept][reached]
            if nodes is not None:
                hit = acc_i[reached]
                samples[hit, node_idx[hit]] = Y[hit]
                node_idx[hit] += 1
                done = hit[node_idx[hit] >= len(nodes)]
            else:
                done = acc_i[reached]
            active[done] = False
        # an accepted step that was clipped to a node keeps the old size
        clipped = accept & (ha < h[idx])
        h[idx] = np.where(clipped, np.maximum(h[idx], ha * factor), ha * factor)
    return Y, samples


def integrate_monodromy(potential, lams, rtol=1e-10, atol=None, derivative=False,
                        nodes=None):
    """Integrate the fundamental matrix over [0, 1] for a batch of energies.

    Parameters
    ----------
    potential : callable
        Vectorized ``q(x)``.
    lams : array_like
        Energies, shape ``(n,)``.
    rtol, atol : float
        Local error tolerances; ``atol`` defaults to ``rtol``.
    derivative : bool
        Also integrate the variational equation and return ``dM/dlam``.
    nodes : array_like, optional
        Increasing x-grid in [0, 1] ending at 1; the fundamental matrix is
        recorded at every node.

    Returns
    -------
    M : ndarray, shape (n, 4, 4)
    dM : ndarray or None, shape (n, 4, 4)
    samples : ndarray or None, shape (n, len(nodes), 4, 4) (or 4x8 with
        the derivative block appended)
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if rtol <= 0:
        raise ValueError("tolerance must be positive")
    if not np.all(np.isfinite(lams)):
        raise DomainError("energies must be finite")
    atol = rtol if atol is None else atol
    if nodes is not None:
        nodes = np.asarray(nodes, dtype=float)
        if nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0) or nodes[0] < 0:
            raise ValueError("nodes must increase within [0, 1] and end at 1")
    n = lams.shape[0]
    chunks = [slice(i, min(i + _CHUNK, n)) for i in range(0, n, _CHUNK)]

    def run(sl):
        return _integrate_chunk(potential, lams[sl], rtol, atol, derivative, nodes)

    workers = min(worker_count(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(sl) for sl in chunks]
    if parts:
        Y = np.concatenate([p[0] for p in parts])
    else:
        Y = np.zeros((0, 4, 8 if derivative else 4))
    samples = None
    if nodes is not None and parts:
        samples = np.concatenate([p[1] for p in parts])
    M = Y[:, :, :4]
    dM = Y[:, :, 4:] if derivative else None
    return M, dM, samples
