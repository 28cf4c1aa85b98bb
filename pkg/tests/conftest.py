import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sobgeo import grid

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def theta(n):
    return grid.get_grid(n).theta


def wobbly_loop(n, a=0.1, b=0.05):
    th = theta(n)
    return np.column_stack([np.cos(th) + a * np.cos(2 * th), np.sin(th) - b * np.sin(2 * th)])


def gentle_loop(n):
    th = theta(n)
    return np.column_stack([1.1 * np.cos(th) + 0.05 * np.cos(2 * th), np.sin(th) + 0.05 * np.sin(3 * th)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
