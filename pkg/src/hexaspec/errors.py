"""Exception types raised by hexaspec."""

from __future__ import annotations


class HexaspecError(Exception):
    """Base class for all library errors."""


class NumericalFailure(HexaspecError):
    """A numerical routine could not reach its requested accuracy."""


class IntegrationError(NumericalFailure):
    """Adaptive step size underflowed while integrating the edge ODE.

    Parameters
    ----------
    lam : float
        Energy of the failing trajectory.
    x : float
        Position on the edge where the step collapsed.
    """

    def __init__(self, lam: float, x: float):
        self.lam = lam
        self.x = x
        super().__init__(f"step size underflow at lambda={lam!r}, x={x!r}")


class SingularBasisError(HexaspecError):
    """The Dirichlet-type edge problem is singular at ``lam``.

    Raised when a quantity built from the phi-basis is requested at an
    energy in the Dirichlet spectrum.
    """

    def __init__(self, lam: float, indicator: float | None = None):
        self.lam = lam
        self.indicator = indicator
        msg = f"lambda={lam!r} lies in the Dirichlet spectrum"
        if indicator is not None:
            msg += f" (indicator {indicator:.3e})"
        super().__init__(msg)


class FlatBranch(SingularBasisError):
    """Signal that ``lam`` is a flat band of the lattice: it is in the
    spectrum for every quasimomentum."""


class DomainError(HexaspecError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(HexaspecError, ValueError):
    """Invalid or unparsable run configuration.

    Parameters
    ----------
    message : str
    key : str, optional
        Dotted name of the offending key.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
