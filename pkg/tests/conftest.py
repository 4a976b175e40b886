import numpy as np
import pytest

from symprealize.geometry import BivectorField
from symprealize.spray import ConnectionCoefficients


@pytest.fixture
def so3():
    return BivectorField(3, {(0, 1): "x3", (0, 2): "-x2", (1, 2): "x1"})


@pytest.fixture
def flat3():
    return ConnectionCoefficients.flat_connection(3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def constant_bivector(P):
    n = P.shape[0]
    return BivectorField(n, {(i, j): repr(float(P[i, j])) for i in range(n) for j in range(i + 1, n)})


def random_antisymmetric(n, rng):
    A = rng.uniform(-1, 1, (n, n))
    return np.round(A - A.T, 3)


@pytest.fixture
def torsionful_conn():
    return ConnectionCoefficients(3, {(0, 0, 1): "x2", (2, 1, 0): "0.5", (1, 2, 2): "x1", (0, 2, 1): "-0.3*x3"})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
