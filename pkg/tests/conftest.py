import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from contactdyn.manifold import darboux, hopf

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def S3():
    return hopf()


@pytest.fixture(scope="session")
def R3():
    return darboux()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary prints them all."""
    def record(label, ok, detail=""):
        CRITERIA.append((label, bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in CRITERIA:
        terminalreporter.write_line(f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}")
