import numpy as np
import pytest
from hypothesis import settings

from origami_haptics import MechanismParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    return MechanismParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
