import numpy as np
import pytest
from hypothesis import settings

from mfkmeans.core import FunctionalSample, Grid

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid150():
    return Grid.uniform(0.0, 1.0, 150)


def random_sample(rng, n=8, J=2, T=5, scale=1.0):
    return FunctionalSample(scale * rng.standard_normal((n, J, T)), Grid.uniform(0.0, 1.0, T))
