import numpy as np
import pytest

from bpsplit.operators import AffineConstraint
from bpsplit.problem import ProblemInstance, SupportInfo


@pytest.fixture
def tiny():
    """``A = [2 1]``, ``b = 2``: unique minimizer ``(1, 0)``, ``cos(theta_1) = 1/sqrt(5)``."""
    A = np.array([[2.0, 1.0]])
    b = np.array([2.0])
    P = ProblemInstance(A, b, np.array([1.0, 0.0]))
    return P, SupportInfo.from_solution(P.x_star), AffineConstraint(A, b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
