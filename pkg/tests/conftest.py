import numpy as np
import pytest
from hypothesis import settings

from tangency_horseshoe.periodic_orbits import census

settings.register_profile("lab", max_examples=200, deadline=None)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def census8():
    return census(8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
