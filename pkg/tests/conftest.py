import numpy as np
import pytest

from taubnut.metric import MetricParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def standard():
    return MetricParams(1.0, 1.0, 2.0, 1.0)


@pytest.fixture
def generic():
    return MetricParams(1.0, 1.0, 0.5, 2.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
