import numpy as np
import pytest

from uabs_hetnet.deployment import NetworkLayout, Region
from uabs_hetnet.radio import PowerModel

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def power_model():
    return PowerModel.from_dbm(46.0, 30.0)


@pytest.fixture
def frozen_layout():
    """2 MBSs, 1 UABS, 10 UEs in a 1 km square."""
    ue = [(120.0, 80.0), (300.0, 410.0), (505.0, 495.0), (620.0, 700.0), (880.0, 150.0),
          (50.0, 950.0), (450.0, 300.0), (700.0, 520.0), (230.0, 760.0), (940.0, 910.0)]
    return NetworkLayout(
        Region(1000.0, 1000.0),
        mbs=[(100.0, 100.0), (900.0, 800.0)],
        uabs=[(500.0, 500.0, 121.92)],
        ue=ue,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
