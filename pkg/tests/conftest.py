import numpy as np
import pytest

from qwivar.config import RunConfig
from qwivar.microdata import generate_world
from qwivar.oracle import small_world_config
from qwivar.tabulate import prepare

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo runs")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per criterion, printed in the terminal summary."""
    def record(number, ok, text):
        _ACCEPTANCE.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}")
        print(_ACCEPTANCE[-1])
    return record


@pytest.fixture(scope="session")
def small_world():
    return generate_world(small_world_config(11))


@pytest.fixture(scope="session")
def small_run():
    cfg = RunConfig(seed=5, tables=("Age x Gender", "Industry", "County x Race"),
                    world={"n_employers": 40, "size_mu": 3.0, "size_sigma": 0.6, "n_counties": 2,
                           "n_industries": 3, "n_quarters": 6})
    world = generate_world(cfg.world_config())
    return prepare(world, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
