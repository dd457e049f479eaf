import numpy as np
import pytest

from polariton_tunneling import (DeviceParams, QGrid, build_fano_matrix,
                                 eigendecompose_arrowhead, polariton_table)

# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def params():
    return DeviceParams()


@pytest.fixture(scope="session")
def grid(params):
    return QGrid.uniform(params)


@pytest.fixture(scope="session")
def table(grid, params):
    return polariton_table(grid, params)


@pytest.fixture(scope="session")
def matrix(grid, params):
    return build_fano_matrix(grid, params)


@pytest.fixture(scope="session")
def eig(matrix):
    return eigendecompose_arrowhead(matrix)


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
