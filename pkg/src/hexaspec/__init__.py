"""Spectral theory of the fourth-order beam operator on hexagonal lattices.

The edge equation ``u'''' + q u = lam u`` on ``[0, 1]`` with an even,
zero-mean, 1-periodic potential ``q`` is integrated once per energy; the
monodromy matrix then yields the Lyapunov branches, the band structure of
the periodic edge operator, the dispersion relation of the honeycomb
lattice, its flat bands and Dirac points, and the first-order effect of
perturbing the joint angles.
"""

from .config import RunConfig, load_config
from .edge import (DEFAULT_TOL, FundamentalBasis, PhiBasis, dirichlet_indicator,
                   dirichlet_spectrum_scan, integrate_fundamental, monodromy, phi_basis)
from .errors import (ConfigError, DomainError, FlatBranch, HexaspecError, IntegrationError,
                     NumericalFailure, SingularBasisError)
from .graphene import (THETA_STAR, DiracPoint, FermiClass, Quasimomentum, SpectrumClass,
                       brillouin_to_cartesian, classify_lambda, dirac_scan, dispersion_residual,
                       fermi_classify, loop_state_residual, s0, s0_norm, solve_sheets)
from .lyapunov import (BandStructure, LyapunovValues, ResonanceGap, SpectralBand,
                       lyapunov_values, periodic_antiperiodic_eigenvalues,
                       real_line_band_structure, resonance_scan)
from .perturbation import (PerturbationConfig, PersistenceReport, assemble_m_eps,
                           det_expansion, dirac_persistence_check, exact_perturbed_roots,
                           perturbed_delta, re_s0_s1, s_k_eps)
from .potential import FREE, PeriodicPotential, build_potential, eval_potential
from .surrogate import MonodromySurrogate

__version__ = "0.1.0"
