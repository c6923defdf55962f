import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hexaspec.edge import (WRONSKIAN_FORM, dirichlet_indicator, dirichlet_spectrum_scan,
                           g_from_phi, g_symmetry_residuals, in_dirichlet_spectrum,
                           integrate_fundamental, monodromy, monodromy_batch, phi12_from_g,
                           phi_basis, phi_symmetry_residuals, relative_dirichlet_indicator,
                           round_trip_residual, wronskian)
from hexaspec.errors import SingularBasisError
from hexaspec.potential import FREE, build_potential
from hexaspec.surrogate import MonodromySurrogate

from conftest import GENERIC
from test_oracles import GENERIC_5

coeffs = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=3)
energies = st.floats(-50, 500, allow_nan=False)
P4 = np.pi ** 4


def test_monodromy_frozen():
    assert np.allclose(monodromy(GENERIC, 5.0, 1e-12), GENERIC_5, rtol=0, atol=1e-10)


def test_monodromy_is_read_only_and_memoized():
    a = monodromy(GENERIC, 3.0)
    assert a is monodromy(GENERIC, 3.0)
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


def test_fundamental_samples_start_at_identity():
    fb = integrate_fundamental(GENERIC, 4.0, n_samples=11)
    assert np.allclose(fb.samples[0], np.eye(4))
    assert fb.g(2, 1) == fb.monodromy[1, 1]


def test_wronskian_matches_form():
    a, b = np.random.default_rng(0).normal(size=(2, 4))
    assert wronskian(a, b) == pytest.approx(a @ WRONSKIAN_FORM @ b)


def test_wronskian_constant_along_edge():
    fb = integrate_fundamental(GENERIC, 40.0, tol=1e-12, n_samples=21)
    S = fb.samples
    W = np.einsum("xja,jk,xkb->xab", S, WRONSKIAN_FORM, S)
    assert np.abs(W - WRONSKIAN_FORM).max() < 1e-9


@given(coeffs, energies)
def test_symplectic_and_unimodular(a, lam):
    M = monodromy(build_potential(a), lam)
    scale = max(1.0, np.abs(M).max()) ** 2
    assert np.abs(M.T @ WRONSKIAN_FORM @ M - WRONSKIAN_FORM).max() < 1e-8 * scale
    assert abs(np.linalg.det(M) - 1.0) < 1e-8 * scale


@given(coeffs, energies)
def test_g_symmetries(a, lam):
    M = monodromy(build_potential(a), lam, 1e-12)
    scale = max(1.0, np.abs(M).max())
    for name, r in g_symmetry_residuals(M).items():
        assert abs(r) < 1e-9 * scale, name


def test_listed_g2_identity_with_g4_does_not_hold():
    M = monodromy(GENERIC, 5.0, 1e-12)
    assert abs(M[1, 1] - M[3, 3]) > 1e-2


@given(coeffs, st.floats(-50, 300, allow_nan=False))
def test_phi_symmetries(a, lam):
    q = build_potential(a)
    M = monodromy(q, lam, 1e-12)
    assume(relative_dirichlet_indicator(M) > 1e-3)
    pb = phi_basis(q, lam, 1e-12)
    scale = max(1.0, np.abs(pb.at0).max(), np.abs(pb.at1).max())
    for name, r in phi_symmetry_residuals(pb).items():
        assert abs(r) < 1e-9 * scale, name


def test_phi_boundary_pattern():
    pb = phi_basis(GENERIC, 5.0)
    hinged = np.array([pb.at0[0], pb.at0[2], pb.at1[0], pb.at1[2]])
    assert np.allclose(hinged, np.eye(4), atol=1e-12)


def test_phi12_closed_form_matches_solve():
    M = monodromy(GENERIC, 5.0)
    pb = phi_basis(GENERIC, 5.0)
    assert np.allclose(phi12_from_g(M), pb.g_coefficients[:, :2], atol=1e-11)


@pytest.mark.parametrize("lam", [-30.0, 5.0, 77.0, 250.0])
def test_g_phi_round_trip(lam):
    assert round_trip_residual(GENERIC, lam, 1e-12) < 1e-8
    at0, at1 = g_from_phi(phi_basis(GENERIC, lam, 1e-12))
    assert np.allclose(at0, np.eye(4), atol=1e-8)


def test_free_dirichlet_spectrum():
    roots = dirichlet_spectrum_scan(FREE, 1e4, 4000)
    expected = [n ** 4 * P4 for n in (1, 2, 3)]
    assert len(roots) == 3
    assert np.allclose(roots, expected, rtol=1e-8, atol=0)


def test_singular_basis_at_dirichlet_eigenvalue():
    assert in_dirichlet_spectrum(FREE, P4)
    assert not in_dirichlet_spectrum(FREE, 0.9 * P4)
    assert dirichlet_indicator(FREE, P4) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(SingularBasisError) as info:
        phi_basis(FREE, P4)
    assert info.value.lam == P4


def test_batch_dispatches_to_surrogate():
    sur = MonodromySurrogate(GENERIC, (0.0, 50.0))
    lams = np.array([1.0, 20.0, 49.0])
    assert np.allclose(monodromy_batch(sur, lams), monodromy_batch(GENERIC, lams), atol=1e-9)
    assert np.allclose(monodromy(sur, 20.0), monodromy(GENERIC, 20.0), atol=1e-9)
