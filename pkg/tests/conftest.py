import numpy as np
import pytest

from sbvs.marginal import Dataset

ACCEPTANCE_LINES = []


def random_dataset(n, p, seed=0, signal=None):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    if signal:
        for j, b in signal.items():
            y = y + b * x[:, j]
    return Dataset(y, x)


@pytest.fixture
def make_data():
    return random_dataset


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
