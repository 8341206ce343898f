from __future__ import annotations

import pytest
from hypothesis import settings

from hmt.functional import ProblemParams
from hmt.green import solve_green
from hmt.grid import build_grid
from hmt.norms import first_eigenvalue
from hmt.solver import SolverConfig, maximize_subcritical

settings.register_profile("hmt", max_examples=40, deadline=None)
settings.load_profile("hmt")


@pytest.fixture(scope="session")
def grid512():
    return build_grid(512)


@pytest.fixture(scope="session")
def grid1024():
    return build_grid(1024)


@pytest.fixture(scope="session")
def lambda1(grid1024):
    return first_eigenvalue(grid1024, "hardy")


@pytest.fixture(scope="session")
def maximizer():
    return maximize_subcritical(ProblemParams(0.5, 0.0, 0.2), SolverConfig(n=512))


@pytest.fixture(scope="session")
def green_hardy(grid1024):
    return solve_green(0.0, grid1024, "hardy")


@pytest.fixture(scope="session")
def green_laplacian(grid1024):
    return solve_green(0.0, grid1024, "laplacian")
