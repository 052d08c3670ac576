"""
Shared fixtures: the Example setup (F = sin of the running logistic integral,
dY = V1(Y) o dB with V1 = 0.5 + 0.3 cos) and a few deterministic paths
"""

import numpy as np
import pytest

from derivations import VectorFieldSet, vector_field
from functionals import make_running_integral
from path_core import SampledPath
from sde_engine import SimulationConfig, sample_driver, sample_driver_batch
from smooth_functions import coordinate, scalar_function, univariate


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo acceptance runs (deselect with -m 'not slow')")


@pytest.fixture
def example_functional():
    """F(t, x) = sin(int_0^t logistic(x_r) dr)"""
    return make_running_integral(univariate('sin'), scalar_function('logistic', coordinate(1)))


@pytest.fixture
def example_fields():
    return VectorFieldSet([
        vector_field('zero', 1),
        vector_field('cos', 1, amplitude=0.3, offset=0.5),
    ])


@pytest.fixture
def smooth_path():
    """x(r) = sin(3r) + r^2 on 2001 nodes of [0, 1]"""
    times = np.linspace(0.0, 1.0, 2001)
    return SampledPath.from_function(lambda r: np.sin(3 * r) + r ** 2, times)


@pytest.fixture
def brownian_driver():
    cfg = SimulationConfig(d=1, e=1, T=1.0, n_steps=1024, seed=11, n_paths=1)
    return sample_driver(cfg, 0)


@pytest.fixture
def brownian_batch():
    cfg = SimulationConfig(d=1, e=1, T=1.0, n_steps=256, seed=5, n_paths=8)
    return sample_driver_batch(cfg, range(8))
