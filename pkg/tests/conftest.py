import os
from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings

from chemolayer.problem import ProblemSpec, build_mesh
from chemolayer.solvers import find_lambda_m, solve_nonlocal_newton

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BASE = ProblemSpec(N=2, R=1.0, m=1.0, u0=1.0)


@lru_cache(maxsize=None)
def newton_solution(spec=BASE, eps=0.02, n_nodes=4001):
    return solve_nonlocal_newton(spec, eps, build_mesh(spec, eps, n_nodes))


@lru_cache(maxsize=None)
def bisection_solution(spec=BASE, eps=0.02, n_nodes=4001):
    return find_lambda_m(spec, eps, build_mesh(spec, eps, n_nodes))


@pytest.fixture
def base_spec():
    return BASE


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[key])
