"""Test configuration shared across the resource-rates test suite."""

import numpy as np
import pytest

from resource_rates.linalg import Operator, random_density, random_hermitian
from resource_rates.settings import numerics_settings


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(numerics_settings.seed)


@pytest.fixture
def qutrit_state(rng: np.random.Generator) -> Operator:
    return random_density(3, rng)


@pytest.fixture
def two_qubit_hermitian(rng: np.random.Generator) -> Operator:
    return random_hermitian(4, rng, dims=(2, 2))
