"""Even, zero-mean, 1-periodic potentials given by finite cosine series."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PeriodicPotential:
    """``q(x) = sum_k a_k cos(2 pi k x)`` with ``k = 1, 2, ...``.

    The cosine basis makes ``q(x) = q(1 - x)`` and zero mean hold by
    construction.  An empty coefficient tuple is the free operator.
    """

    cosine_coefficients: tuple = ()

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.cosine_coefficients)
        for i, a in enumerate(coeffs):
            if not math.isfinite(a):
                raise DomainError(f"coefficient {i} is not finite: {a!r}")
        object.__setattr__(self, "cosine_coefficients", coeffs)
        object.__setattr__(self, "_k", 2.0 * np.pi * np.arange(1, len(coeffs) + 1))
        object.__setattr__(self, "_a", np.asarray(coeffs))

    @property
    def is_free(self) -> bool:
        return not any(self.cosine_coefficients)

    def __call__(self, x):
        """Vectorized evaluation; no domain check (the integrator calls this)."""
        x = np.asarray(x, dtype=float)
        if self._a.size == 0:
            return np.zeros_like(x)
        # q(x) = q(1 - x); this fold sends x and fl(1 - x) to the same
        # argument, so the reflection symmetry holds bit for bit
        y = np.where(x > 0.5, 1.0 - x, 1.0 - (1.0 - x))
        # term-by-term sum: a BLAS matvec would round differently with the
        # batch length, and results must not depend on batch composition
        out = np.zeros_like(y)
        for a, k in zip(self._a, self._k):
            out += a * np.cos(k * y)
        return out

    def label(self) -> str:
        if self.is_free:
            return "free"
        return "cos[" + ", ".join(repr(a) for a in self.cosine_coefficients) + "]"


FREE = PeriodicPotential()


def build_potential(coefficients) -> PeriodicPotential:
    """Build a potential from cosine coefficients ``a_1, a_2, ...``.

    Raises
    ------
    DomainError
        If any coefficient is not a finite real number; the message names
        its index.
    """
    return PeriodicPotential(tuple(coefficients))


def eval_potential(q: PeriodicPotential, x: float) -> float:
    """Evaluate ``q`` at a point of the unit edge."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x!r} outside [0, 1]")
    return float(q(x))
