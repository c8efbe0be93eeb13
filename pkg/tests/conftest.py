import numpy as np
import pytest

from geomech.mechanics import NaturalSystemSpec


@pytest.fixture
def quartic():
    def V(q):
        r2 = q @ q
        return 0.5 * r2 + 0.25 * r2 * r2

    return NaturalSystemSpec(2, V, lambda q: q + (q @ q) * q, name="quartic")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
