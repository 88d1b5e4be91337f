import json
import sys
from pathlib import Path

import pytest

from gasflux import GasProperties, israel_network
from gasflux.core import data_path
from gasflux.scenario import load_scenario

ORACLES = json.loads((Path(__file__).parent / "oracles" / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def oracle():
    return ORACLES


@pytest.fixture(scope="session")
def network():
    return israel_network()


@pytest.fixture(scope="session")
def props():
    return GasProperties()


@pytest.fixture(scope="session")
def ideal():
    return GasProperties(eos="ideal")


@pytest.fixture(scope="session")
def shipped(network):
    def load(k):
        return load_scenario(data_path("scenarios", f"scenario{k}.json"), network)
    return load


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
