import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexaspec.errors import DomainError
from hexaspec.potential import FREE, PeriodicPotential, build_potential, eval_potential

coeffs = st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=5)


def test_free_is_zero():
    assert FREE.is_free
    assert FREE.label() == "free"
    assert np.all(FREE(np.linspace(0, 1, 11)) == 0.0)


def test_known_value():
    q = build_potential([2.0, -1.0])
    # 2 cos(pi/2) - cos(pi) at x = 1/4
    assert q(0.25) == pytest.approx(1.0, abs=1e-15)


def test_rejects_non_finite_coefficient():
    with pytest.raises(DomainError, match="coefficient 1"):
        build_potential([1.0, math.inf])


def test_eval_domain():
    with pytest.raises(DomainError):
        eval_potential(FREE, 1.5)
    assert eval_potential(build_potential([1.0]), 0.0) == pytest.approx(1.0)


def test_zero_coefficients_count_as_free():
    assert PeriodicPotential((0.0, 0.0)).is_free


@given(coeffs)
def test_reflection_symmetry_is_exact(a):
    q = build_potential(a)
    x = np.linspace(0.0, 1.0, 1001)
    assert np.array_equal(q(x), q(1.0 - x))


@given(coeffs)
def test_zero_mean(a):
    q = build_potential(a)
    # trapezoid on a periodic integrand is spectrally accurate
    x = np.linspace(0.0, 1.0, 257)[:-1]
    assert abs(np.mean(q(x))) <= 1e-12 * (1 + sum(map(abs, a)))


@given(coeffs, st.floats(0, 1))
def test_periodic_extension(a, x):
    q = build_potential(a)
    assert q(x + 1.0) == pytest.approx(float(q(x)), abs=1e-11 * (1 + sum(map(abs, a))))
