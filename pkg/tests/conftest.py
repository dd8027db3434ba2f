import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from riskmkt.config import LOSS_GENERATORS
from riskmkt.core import MarketInstance, ScenarioSpace

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def example1_market():
    n = 256
    z1, z2 = LOSS_GENERATORS["example1_z1"](n), LOSS_GENERATORS["example1_z2"](n)
    return MarketInstance.cvar_market(ScenarioSpace.uniform(n), [z1, z2], [0.2, 0.25])


@pytest.fixture(scope="session")
def example2_market():
    z = LOSS_GENERATORS["example2_z"](256)
    return MarketInstance.cvar_market(ScenarioSpace.uniform(256), [z, z], [0.2, 0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
