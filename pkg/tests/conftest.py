import numpy as np
import pytest
from hypothesis import strategies as st

from gaussrenyi.statespec import random_state, thermal, displaced_thermal

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_faithful(seed, n_modes=1, **kwargs):
    return random_state(np.random.default_rng(seed), n_modes, **kwargs)


def random_cov(seed, n_modes=1, **kwargs):
    return random_faithful(seed, n_modes, **kwargs).cov


@pytest.fixture
def thermal3():
    return thermal(nu=3.0)


@pytest.fixture
def thermal5():
    return thermal(nu=5.0)


@pytest.fixture
def displaced3():
    return displaced_thermal(N=1.0, q=1.0, p=0.0)
