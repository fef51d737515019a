import numpy as np
import pytest

from activetask.tasks import generate_synthetic

_CRITERIA = []


def record_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    _CRITERIA.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_coll():
    return generate_synthetic(T=8, n=60, m=20, n_test=200, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
