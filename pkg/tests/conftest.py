import numpy as np
import pytest

from embdyn import make_grid


@pytest.fixture
def grid():
    return make_grid(0.0, 1.0, 201)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
