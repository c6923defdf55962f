"""Grid bracketing and batched refinement of real roots.

Every spectral scan in the package has the same shape: evaluate a smooth
function of lambda on a grid, bracket sign changes, refine all brackets at
once, then look for roots that touch zero without crossing.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import elementwise


def sign_change_brackets(values):
    """Indices ``i`` with a strict sign change between ``values[i]`` and
    ``values[i+1]``.  Exact grid zeros are reported separately by
    :func:`grid_zeros`."""
    v = np.asarray(values)
    return np.nonzero(v[:-1] * v[1:] < 0)[0]


def grid_zeros(values):
    return np.nonzero(np.asarray(values) == 0.0)[0]


def refine_brackets(f, lo, hi, rtol=1e-10, args=()):
    """Refine many sign-change brackets simultaneously.

    Parameters
    ----------
    f : callable
        Elementwise ``f(x, *args)``; called with the still-active subset.
    lo, hi : array_like
        Bracket endpoints with ``sign f(lo) = -sign f(hi)``.
    rtol : float
        Relative tolerance on the root; an absolute floor of ``1e-3 rtol``
        handles roots at the origin.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.size == 0:
        return np.zeros(0)
    res = elementwise.find_root(
        f, (lo, hi), args=args,
        tolerances=dict(xrtol=rtol, xatol=1e-3 * rtol, fatol=0.0, frtol=0.0),
    )
    return np.asarray(res.x, dtype=float)


def local_minima(values):
    """Interior indices where ``values`` has a strict local minimum."""
    v = np.asarray(values)
    if v.size < 3:
        return np.zeros(0, dtype=int)
    return np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]))[0] + 1


def refine_minima(f, lo, mid, hi, rtol=1e-10, args=()):
    """Refine minima of elementwise ``f`` inside ``lo < mid < hi`` brackets."""
    if np.size(mid) == 0:
        return np.zeros(0), np.zeros(0)
    res = elementwise.find_minimum(
        f, (np.asarray(lo, float), np.asarray(mid, float), np.asarray(hi, float)),
        args=args,
        tolerances=dict(xrtol=rtol, xatol=1e-3 * rtol, fatol=0.0, frtol=0.0),
    )
    return np.asarray(res.x, float), np.asarray(res.f_x, float)


def scan_roots(f, grid, rtol=1e-10, scale=None, tangential_tol=None, fprime=None):
    """All roots of ``f`` on the span of ``grid``.

    Parameters
    ----------
    f : callable
        Elementwise, vectorized function of lambda.
    grid : array_like
        Increasing sample points.
    rtol : float
        Root tolerance passed to :func:`refine_brackets`.
    scale : callable, optional
        Elementwise positive scale; tangential candidates are judged by
        ``|f| / scale``.  Defaults to 1.
    tangential_tol : float, optional
        Accept a non-crossing local minimum of ``|f|/scale`` as a root when
        its refined value is below this.  ``None`` disables the search.
    fprime : callable, optional
        Elementwise derivative of ``f``.  When given, a tangential candidate
        is located as a sign change of ``fprime``, which is far better
        conditioned than minimizing ``|f|``.

    Returns
    -------
    roots : ndarray
        Sorted roots.
    kinds : ndarray of str
        ``"crossing"``, ``"grid"`` or ``"tangential"`` per root.
    """
    grid = np.asarray(grid, dtype=float)
    vals = f(grid)
    br = sign_change_brackets(vals)
    roots = list(refine_brackets(f, grid[br], grid[br + 1], rtol))
    kinds = ["crossing"] * len(roots)
    for i in grid_zeros(vals):
        roots.append(grid[i])
        kinds.append("grid")

    if tangential_tol is not None:
        sc = (lambda x: np.ones_like(x)) if scale is None else scale
        rel = np.abs(vals) / sc(grid)
        cand = [i for i in local_minima(rel)
                if vals[i - 1] * vals[i] > 0 and vals[i] * vals[i + 1] > 0]
        if cand:
            cand = np.asarray(cand)
            g = lambda x: np.abs(f(x)) / sc(x)
            lo, hi = grid[cand - 1], grid[cand + 1]
            xm = np.empty(cand.size)
            use_min = np.ones(cand.size, dtype=bool)
            if fprime is not None:
                dl, dh = fprime(lo), fprime(hi)
                flip = dl * dh < 0
                xm[flip] = refine_brackets(fprime, lo[flip], hi[flip], rtol)
                use_min = ~flip
            if use_min.any():
                xm[use_min] = refine_minima(g, lo[use_min], grid[cand[use_min]],
                                            hi[use_min], rtol)[0]
            fm = g(xm)
            for x, v in zip(xm, fm):
                if v < tangential_tol:
                    roots.append(float(x))
                    kinds.append("tangential")
    order = np.argsort(roots, kind="stable")
    return np.asarray(roots)[order], np.asarray(kinds, dtype=object)[order]
