import numpy as np
import pytest

from heatplan import pipeline
from heatplan.geodata import generate_synthetic
from heatplan.solar import StandardRoofSet
from heatplan.weather import synthetic_weather


@pytest.fixture(scope="session")
def weather():
    return synthetic_weather()


@pytest.fixture(scope="session")
def standard(weather):
    return StandardRoofSet.from_weather(weather)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(3, 60, "two_districts")


@pytest.fixture(scope="session")
def small_inputs(small_dataset, weather):
    return pipeline.prepare(small_dataset, weather)


@pytest.fixture(scope="session")
def districts():
    return generate_synthetic(1, 859, "two_districts")


@pytest.fixture(scope="session")
def district_inputs(districts, weather):
    return pipeline.prepare(districts, weather)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line, then fail the test if the criterion does not hold."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE].append((number, line))
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
