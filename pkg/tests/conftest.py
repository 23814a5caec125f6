import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lsw_encounters.params import lsw_source  # noqa: E402
from lsw_encounters.solver import SolverConfig, solve_profile  # noqa: E402

DELTA = 0.04


@pytest.fixture(scope='session')
def config():
    return SolverConfig(DELTA)


@pytest.fixture(scope='session')
def grid(config):
    return config.build_grid()


@pytest.fixture(scope='session')
def source(grid):
    return lsw_source(grid)


@pytest.fixture(scope='session')
def solved(config):
    return solve_profile(config)
