import numpy as np
import pytest

from mpspec.fixtures import other_example, right_definite_example, running_example
from mpspec.pencil import PerturbationModel

# eigenvalue search boxes used throughout the tests
BOXES = {
    "running": "0,4,0,4",
    "other": "0,4,-2,1",
    "right_definite": "-1,10,-1,6",
}

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def running():
    return running_example()


@pytest.fixture(scope="session")
def other():
    return other_example()


@pytest.fixture(scope="session")
def right_definite():
    return right_definite_example()


@pytest.fixture(scope="session")
def solved():
    """name -> (pencil, eigenpairs) for all three example problems."""
    from mpspec.fixtures import EXAMPLES
    from mpspec.solver import solve_all

    out = {}
    for name, make in EXAMPLES.items():
        p = make()
        out[name] = (p, solve_all(p, BOXES[name], 101))
    return out


@pytest.fixture
def rel():
    return PerturbationModel.relative


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
