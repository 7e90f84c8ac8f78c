import numpy as np
import pytest

from polygauss.instances import square_corner, square_with_diagonal, triangle, unit_square


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def tri():
    return triangle()


@pytest.fixture
def corner():
    return square_corner()


@pytest.fixture
def square5():
    return square_with_diagonal()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
