import numpy as np
import pytest

from paracomm.spectral import Grid3

# Lines recorded by the acceptance gate, echoed in the terminal summary so
# they survive output capture.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid8():
    return Grid3(8)


@pytest.fixture(scope="session")
def grid16():
    return Grid3(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid3(32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
