import numpy as np
import pytest

from genprob.dist import JointDist
from genprob.rules import RuleContext

J0 = [[0.3, 0.2], [0.1, 0.4]]


@pytest.fixture
def j0():
    return JointDist(J0)


@pytest.fixture
def ctx0(j0):
    return RuleContext.from_joint(j0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
