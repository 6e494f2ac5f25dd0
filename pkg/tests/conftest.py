import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from heatborel.measures import cosine_measure
from heatborel.series import DeformationConfig

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cosine_free():
    """c(x) = 0.2 cos x, free case."""
    return DeformationConfig(cosine_measure(0.1), 0.0, n_max=4, quad_order=10)


@pytest.fixture(scope="session")
def cosine_harmonic():
    return DeformationConfig(cosine_measure(0.1), 1.0, n_max=4, quad_order=10)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(1234))
