import numpy as np
import pytest

from irsplan.channel import IrsSpec, RadioConfig
from irsplan.geometry import CellConfig
from irsplan.planner import algorithm1, line_search


@pytest.fixture(scope="session")
def radio():
    return RadioConfig()


@pytest.fixture(scope="session")
def cell():
    return CellConfig()


@pytest.fixture(scope="session")
def irs():
    return IrsSpec()


@pytest.fixture(scope="session")
def plan_m100(cell, radio, irs):
    """The reference heavy run: exhaustive search, 100 surfaces, <= 3 rings.

    Session-scoped because several suites reuse it (power control anchors,
    planner anchors, Monte Carlo agreement, acceptance).
    """
    return line_search(cell, radio, irs, 100, 3)


@pytest.fixture(scope="session")
def plan_m15_a1(cell, radio, irs):
    """Small constructive plan used by the simulation suite."""
    return algorithm1(cell, radio, irs, 15, I_max=10)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
