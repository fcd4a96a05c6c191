import numpy as np
import pytest

from gempl.constants import CODATA
from gempl.gem_field import SolenoidConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def shell():
    # thin shell, unit mass current per length
    return SolenoidConfig(radius=0.1, shell_thickness=1e-4, mass_per_length=1.0, angular_velocity=2 * np.pi)


@pytest.fixture
def codata():
    return CODATA
