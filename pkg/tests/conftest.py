import numpy as np
import pytest

from hpmropt import design as dg
from hpmropt import econ
from hpmropt.pipeline import sample_dataset
from hpmropt.rl.reward import CostFunction
from hpmropt.rom import ReducedOrderModel


@pytest.fixture(scope="session")
def constants():
    return dg.ReactorConstants()


@pytest.fixture(scope="session")
def rom():
    return ReducedOrderModel()


@pytest.fixture(scope="session")
def nominal():
    return dg.DesignPoint.nominal()


@pytest.fixture(scope="session")
def fin():
    return econ.FinanceAssumptions()


@pytest.fixture(scope="session")
def db_be():
    return econ.CostDatabase().for_mode("be")


@pytest.fixture(scope="session")
def db_graphite():
    return econ.CostDatabase().for_mode("graphite")


@pytest.fixture(scope="session")
def cost_be(db_be, fin, constants):
    return CostFunction(db_be, fin, constants, cap=30_000.0)


@pytest.fixture(scope="session")
def small_dataset(rom, db_be, fin, constants):
    """About 170 filtered ROM rows; enough for fits but cheap."""
    ds, _ = sample_dataset(300, 11, rom, db_be, fin, constants)
    return ds


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one result line per acceptance criterion."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
