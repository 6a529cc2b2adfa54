import math

import numpy as np
import pytest

from delayres.dde import DelayDynamics

A1_C1 = 0.9 * math.exp(-0.1)
A1_C2 = 0.4 * math.exp(-0.1)


@pytest.fixture
def config1():
    return DelayDynamics.scalar(-1.0, A1_C1, 1.0)


@pytest.fixture
def config2():
    return DelayDynamics.scalar(-0.5, A1_C2, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
