import math

import pytest
from hypothesis import HealthCheck, settings

from blowup_lab.dynamic_boundary import evolve_uncontrolled
from blowup_lab.nonlinearity import AbsorptionLaw, ForcingLaw
from blowup_lab.radial_elliptic import large_solution

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cubic_absorption():
    return AbsorptionLaw.power(3.0)


@pytest.fixture(scope="session")
def strong_run(cubic_absorption):
    """Boundary evolution with cubic source and cubic absorption from b(0) = 2."""
    return evolve_uncontrolled(ForcingLaw.power(3.0), cubic_absorption, R=1.0, N=3, u0=2.0)


@pytest.fixture(scope="session")
def weak_run(cubic_absorption):
    """Quadratic source against cubic absorption, lambda = 2."""
    return evolve_uncontrolled(ForcingLaw.power(2.0, lam=2.0), cubic_absorption, R=1.0, N=3,
                               u0=2.0)


@pytest.fixture(scope="session")
def cubic_large(cubic_absorption):
    return large_solution(cubic_absorption, R=1.0, N=3)


@pytest.fixture(scope="session")
def sqrt2():
    return math.sqrt(2.0)
