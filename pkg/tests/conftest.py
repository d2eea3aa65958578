import numpy as np
import pytest

from hqamcr.channel import ChannelEnv, SensingModel


@pytest.fixture
def env():
    return ChannelEnv()


@pytest.fixture
def sensing():
    return SensingModel(0.9, 0.1, 0.4)


@pytest.fixture
def perfect():
    return SensingModel(1.0, 0.0, 0.4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
