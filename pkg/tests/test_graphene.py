import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexaspec.edge import dirichlet_spectrum_scan
from hexaspec.errors import DomainError, FlatBranch
from hexaspec.graphene import (THETA_STAR, Quasimomentum, SpectrumClass, brillouin_to_cartesian,
                               classify_lambda, dirac_scan, dispersion_residual, factored_residual,
                               fermi_classify, fermi_classify_many, fermi_polynomial,
                               loop_state_residual, residual_from_g0, s0, s0_norm,
                               second_order_residual, solve_sheets, solve_sheets_many, theta_grid)
from hexaspec.potential import FREE, build_potential
from hexaspec.sweeps import s0_orbit_representatives

from conftest import GENERIC

P4 = np.pi ** 4
angles = st.floats(-math.pi, math.pi, allow_nan=False)
small = st.floats(-3, 3, allow_nan=False)


def test_s0_vanishes_at_theta_star():
    assert s0_norm(THETA_STAR) < 1e-15
    assert s0_norm(-THETA_STAR) < 1e-15
    assert s0_norm((0.0, 0.0)) == 3.0


@given(angles, angles)
def test_s0_range_and_hermitian_symmetry(t1, t2):
    v = s0((t1, t2))
    assert 0.0 <= abs(v) <= 3.0
    assert abs(s0((-t1, -t2)) - np.conj(v)) < 1e-15


@given(angles, angles)
def test_fermi_polynomial_factors_s0(t1, t2):
    z1, z2 = np.exp(-1j * t1), np.exp(-1j * t2)
    prod = fermi_polynomial(z1, z2) * fermi_polynomial(1 / z1, 1 / z2)
    assert abs(prod - s0_norm((t1, t2)) ** 2) < 1e-12


@given(small, small, small, small, st.floats(0, 1))
def test_factored_residual_identity(a, b, c, d, cc):
    G = np.array([[a, b], [c, d]])
    t1, t2 = 0.5 * (a + d), 0.25 * (a - d) ** 2 + b * c
    ref = residual_from_g0(G, cc)
    assert abs(factored_residual(t1, t2, cc) - ref) < 1e-11 * (1 + abs(ref) + np.abs(G).max() ** 4)


def test_quasimomentum_domain():
    with pytest.raises(DomainError):
        Quasimomentum(4.0, 0.0)
    assert (-THETA_STAR).theta1 == -THETA_STAR.theta1


def test_theta_grid_is_antisymmetric():
    t = theta_grid(181)
    assert np.array_equal(t, -t[::-1])
    assert t[0] == -np.pi and t[-1] == np.pi


def test_brillouin_to_cartesian():
    k = brillouin_to_cartesian(THETA_STAR)
    assert k == pytest.approx((2 * math.pi / 3, -2 * math.pi / (3 * math.sqrt(3))))


def test_free_dispersion_zero_set():
    th = (0.4, -1.1)
    c = s0_norm(th) / 3
    lam = math.acos(c) ** 4
    assert abs(dispersion_residual(FREE, lam, th, 1e-12)) < 1e-9
    assert abs(dispersion_residual(FREE, lam + 0.5, th)) > 1e-3


def test_flat_branch_raised_on_dirichlet_level():
    with pytest.raises(FlatBranch):
        dispersion_residual(FREE, P4, (0.1, 0.2))


def test_solve_sheets_free_examples():
    at_star = [s.lam for s in solve_sheets(FREE, THETA_STAR, (0, 200), 400)]
    assert np.allclose(at_star, [(math.pi / 2) ** 4] * 2, rtol=1e-9)
    # both branches equal 1 at lam = 0, so that energy carries two sheets
    at_zero = solve_sheets(FREE, (0.0, 0.0), (0, 200), 400)
    assert [(s.branch, s.sign) for s in at_zero] == [(1, 1), (2, 1), (2, -1)]
    assert np.allclose([s.lam for s in at_zero], [0.0, 0.0, P4], rtol=1e-7, atol=1e-9)


def test_solve_sheets_many_matches_single():
    th = np.array([[0.3, -0.2], [1.5, 2.9], [-2.0, 0.4]])
    many = solve_sheets_many(GENERIC, th, (0, 300), 600)
    for t, rows in zip(th, many):
        assert rows == solve_sheets(GENERIC, t, (0, 300), 600)
        for s in rows:
            assert abs(dispersion_residual(GENERIC, s.lam, t)) < 1e-6


def test_free_dirac_points():
    pts = dirac_scan(FREE, (0, 600), 1200)
    assert [p.cone_type for p in pts] == ["two-cone", "two-cone"]
    assert np.allclose([p.lambda_star for p in pts],
                       [(math.pi / 2) ** 4, (3 * math.pi / 2) ** 4], rtol=1e-6)


def test_classification():
    assert classify_lambda(FREE, P4) is SpectrumClass.PP
    assert classify_lambda(FREE, 10.0) is SpectrumClass.AC
    assert classify_lambda(FREE, -10.0) is SpectrumClass.GAP
    assert fermi_classify(FREE, 0.0).cls == "reducible"
    assert fermi_classify(FREE, 5.0).cls == "irreducible"
    assert fermi_classify(FREE, P4).cls == "flat"


def test_fermi_batch_matches_scalar():
    lams = np.linspace(-50, 300, 37)
    batch = fermi_classify_many(GENERIC, lams)
    assert [f.cls for f in batch] == [fermi_classify(GENERIC, x).cls for x in lams]


@pytest.mark.parametrize("n", [1, 2])
def test_free_loop_states(n):
    assert loop_state_residual(FREE, n ** 4 * P4) < 1e-8


def test_loop_states_for_potential():
    q = build_potential([0.5])
    for lam in dirichlet_spectrum_scan(q, 2000, 800):
        assert loop_state_residual(q, lam) < 1e-8


def test_loop_state_requires_dirichlet_level():
    with pytest.raises(DomainError):
        loop_state_residual(FREE, 50.0)


def test_second_order_variety():
    assert second_order_residual(math.pi ** 2, (0.3, 0.1)) < 1.0
    th = (0.4, -1.1)
    Lam = math.acos(s0_norm(th) / 3) ** 2
    assert abs(second_order_residual(Lam, th)) < 1e-14


@pytest.mark.parametrize("n,count", [(61, 331), (181, 2791)])
def test_s0_orbits(n, count):
    reps, inverse = s0_orbit_representatives(n)
    assert len(reps) == count
    t = theta_grid(n)
    T = np.stack(np.meshgrid(t, t, indexing="ij"), -1).reshape(-1, 2)
    assert np.abs(s0_norm(T) - s0_norm(reps)[inverse]).max() < 1e-14
