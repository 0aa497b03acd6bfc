import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from greenbundles import catalog

settings.register_profile(
    "default", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def pendulum():
    return catalog.get("pendulum")


@pytest.fixture(scope="session")
def harmonic():
    return catalog.get("harmonic")


@pytest.fixture(scope="session")
def free1():
    return catalog.get("free_particle(1)")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
