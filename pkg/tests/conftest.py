import numpy as np
import pytest

from mfbcs import model
from mfbcs.states import OnSiteState


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_params(rng, gamma_max=2.0):
    return model.ModelParams(
        mu=float(rng.uniform(-1, 1)),
        h=float(rng.uniform(-1, 1)),
        lam=float(rng.uniform(0, 1)),
        gamma=float(rng.uniform(0, gamma_max)),
    )


def random_even_state(rng):
    return OnSiteState.random_even(rng)
