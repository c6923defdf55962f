import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hexaspec.potential import FREE, build_potential

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# q(x) = 1.3 cos 2 pi x - 0.7 cos 4 pi x: small, generic, no special structure
GENERIC = build_potential([1.3, -0.7])
STRONG = build_potential([10.0])


@pytest.fixture
def generic():
    return GENERIC


@pytest.fixture
def free():
    return FREE


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
