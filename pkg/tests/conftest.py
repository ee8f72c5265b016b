import numpy as np
import pytest

from ratebound.core import TaskSpec
from ratebound.solver import solve
from ratebound.tasks import grid_task, two_task_problem

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def random_task(rng, n_obs, n_act, p_y=None):
    if p_y is None:
        p_y = rng.dirichlet(np.ones(n_obs))
    return TaskSpec([f"x{i}" for i in range(n_act)], [f"y{j}" for j in range(n_obs)],
                    rng.uniform(0, 1, size=(n_obs, n_act)), p_y)


@pytest.fixture
def rng():
    return np.random.default_rng(20131205)


@pytest.fixture(scope="session")
def two_task():
    return two_task_problem()


@pytest.fixture(scope="session")
def grid3():
    return grid_task(3)


@pytest.fixture(scope="session")
def grid3_beta10(grid3):
    return solve(grid3, 10.0)


@pytest.fixture(scope="session")
def grid3_beta01(grid3):
    return solve(grid3, 0.1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (len(k), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
