import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def grid():
    from topoforge.simbackend import FrequencyGrid

    return FrequencyGrid()


@pytest.fixture
def mock():
    from topoforge.simbackend import MockBackend

    return MockBackend()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
