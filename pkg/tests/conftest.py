import numpy as np
import pytest

from ymlab.algebra import su2, u1
from ymlab.grid import Grid


@pytest.fixture(scope="session")
def grid16():
    return Grid(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def grid8():
    return Grid(8)


@pytest.fixture(scope="session")
def s2():
    return su2()


@pytest.fixture(scope="session")
def ab():
    return u1()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
