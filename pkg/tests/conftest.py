import numpy as np
import pytest

from mimocap.channelio import bundled_channel
from mimocap.core import PowerConstraints


@pytest.fixture(scope="session")
def h_3x3():
    return bundled_channel("mimo_3x3")


@pytest.fixture(scope="session")
def h_4x4():
    return bundled_channel("mimo_4x4")


@pytest.fixture(scope="session")
def h_4x3():
    return bundled_channel("mimo_4x3")


@pytest.fixture(scope="session")
def h_2x3():
    return bundled_channel("mimo_2x3")


@pytest.fixture()
def tight_caps():
    return PowerConstraints(1.0, np.array([0.1, 0.1, 1.0]))


def assert_nondecreasing(values, slack=1e-12):
    for a, b in zip(values, values[1:]):
        assert b >= a - slack, f"sequence decreased: {values}"
