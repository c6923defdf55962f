"""Reference computations that share no code with the production path.

``free_monodromy`` is the closed form for ``q = 0``; ``reference_monodromy``
integrates the same first-order system with scipy's DOP853.  Both are used
by the validation suite and the tests.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp


def free_monodromy(lam: float) -> np.ndarray:
    """``M(lam)`` of ``u'''' = lam u`` in closed form.

    With ``mu = lam^(1/4)`` the fundamental solutions are
    ``(cosh + cos)/2``, ``(sinh + sin)/(2 mu)``, ``(cosh - cos)/(2 mu^2)``
    and ``(sinh - sin)/(2 mu^3)`` in ``mu x``.  Each is an even power series
    in ``mu`` with real coefficients, so evaluating at a complex fourth
    root covers ``lam < 0``; the Taylor polynomial is used near zero.
    """
    lam = float(lam)
    if abs(lam) < 1e-6:
        # u = sum lam^n x^(4n+k) / (4n+k)!, two terms are exact to 1e-13
        out = np.zeros((4, 4))
        for k in range(4):
            for j in range(4):
                # j-th derivative at x = 1 of x^k/k! + lam x^(k+4)/(k+4)!
                p = k - j
                lead = 1.0 / _fact(p) if p >= 0 else 0.0
                out[j, k] = lead + lam / _fact(k + 4 - j)
        return out
    mu = np.complex128(lam) ** 0.25
    ch, c, sh, s = np.cosh(mu), np.cos(mu), np.sinh(mu), np.sin(mu)
    vals = {"Cp": ch + c, "Sm": sh - s, "Cm": ch - c, "Sp": sh + s}
    cycle = ["Cp", "Sm", "Cm", "Sp"]   # d/dx of each is mu times the next

    def column(start, power):
        i = cycle.index(start)
        return [mu ** j * vals[cycle[(i + j) % 4]] / (2.0 * mu ** power) for j in range(4)]

    cols = [column("Cp", 0), column("Sp", 1), column("Cm", 2), column("Sm", 3)]
    return np.real(np.array(cols).T)


def _fact(n):
    return float(np.prod(np.arange(1, n + 1))) if n > 0 else 1.0


def reference_monodromy(potential, lam: float, rtol: float = 1e-12) -> np.ndarray:
    """``M(lam)`` from scipy's DOP853, column by column."""
    def rhs(x, y):
        return [y[1], y[2], y[3], (lam - float(potential(x))) * y[0]]

    cols = []
    for k in range(4):
        y0 = np.zeros(4)
        y0[k] = 1.0
        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2)
        cols.append(sol.y[:, -1])
    return np.column_stack(cols)
