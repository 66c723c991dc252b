import numpy as np
import pytest

from slowbond.fields import cosine_bump, sine_linear, smoothed_step

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bump():
    return cosine_bump()


@pytest.fixture(scope="session")
def step():
    return smoothed_step()


@pytest.fixture(scope="session")
def drive():
    return sine_linear()
