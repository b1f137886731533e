import numpy as np
import pytest

from finsler import box_chart


@pytest.fixture
def rng():
    return np.random.default_rng(20240701)


@pytest.fixture
def plane():
    return box_chart((-10.0, 10.0), (-10.0, 10.0))


def random_points(rng, chart, count, shrink=0.2):
    lo = chart.lo + shrink
    hi = chart.hi - shrink
    return lo + (hi - lo) * rng.random((count, chart.dim))


def random_vectors(rng, count, dim, lo=0.2, hi=3.0):
    dirs = rng.normal(size=(count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * rng.uniform(lo, hi, size=(count, 1))
