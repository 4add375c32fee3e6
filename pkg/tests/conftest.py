import numpy as np
import pytest

from ricci_reduce.core_linalg import random_sp_element
from ricci_reduce.reduction import ReductionChart, sample_points


@pytest.fixture(scope="session")
def chart2():
    return ReductionChart.at(random_sp_element(2, 1))


@pytest.fixture(scope="session")
def chart3():
    return ReductionChart.at(random_sp_element(3, 2))


@pytest.fixture(scope="session")
def y2(chart2):
    return sample_points(chart2, 1, 5)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
