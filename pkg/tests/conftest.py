import numpy as np
import pytest

from stochwave.dynamics import System
from stochwave.grid import Grid
from stochwave.params import Params


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def pstar():
    return Params()


@pytest.fixture(scope="session")
def system(pstar, grid):
    return System.default(pstar, grid)


@pytest.fixture(scope="session")
def quiet(grid):
    """P* with the noise switched off."""
    return System.default(Params(epsilon=0.0), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
