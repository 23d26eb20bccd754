import math

import pytest
from hypothesis import HealthCheck, settings

from fblquant.channel import Rayleigh, Rician
from fblquant.fbl import LinkParams

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def rayleigh():
    return Rayleigh()


@pytest.fixture(scope="session")
def rician():
    return Rician(10.0)


@pytest.fixture(scope="session")
def lp128():
    return LinkParams.from_db(128, 10)


@pytest.fixture(scope="session")
def lp_inf():
    return LinkParams.from_db(math.inf, 10)


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def verdict():
    def record(name: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
