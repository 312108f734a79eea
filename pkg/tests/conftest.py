import numpy as np
import pytest

from phasecov.dynamics import TimeGrid


@pytest.fixture
def default_grid():
    return TimeGrid()


@pytest.fixture
def small_grid():
    return TimeGrid(5.0, 501)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
