import numpy as np
import pytest

from conformalrf.core import make_dataset
from conformalrf.io import synthetic_blobs

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def blobs40():
    """40 points, centers (0,0) and (5,5): separable with overwhelming probability."""
    return synthetic_blobs(20, [[0, 0], [5, 5]], 1.0, seed=7)


@pytest.fixture(scope="session")
def blobs100():
    return synthetic_blobs(50, [[0, 0], [5, 5]], 1.0, seed=3)


@pytest.fixture
def tiny():
    return make_dataset([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]], ["a", "b", "a"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
