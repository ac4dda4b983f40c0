"""
Shared pytest fixtures: shipped scenario paths, loaded scenarios and a fresh event bus
"""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent
sys.path.insert(0, str(ROOT))

from components.managers.event_bus import EventBus, set_event_bus  # noqa: E402
from components.managers.scenario_manager import load  # noqa: E402

SCENARIO_DIR = ROOT / "scenarios"


@pytest.fixture(autouse=True)
def event_bus():
    bus = EventBus()
    set_event_bus(bus)
    yield bus
    set_event_bus(None)


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def scenario_path():
    def _path(name: str) -> Path:
        return SCENARIO_DIR / f"{name}.json"
    return _path


@pytest.fixture(scope="session")
def config1():
    return load(SCENARIO_DIR / "config1.json")


@pytest.fixture(scope="session")
def config2():
    return load(SCENARIO_DIR / "config2.json")


@pytest.fixture(scope="session")
def config3():
    return load(SCENARIO_DIR / "config3.json")


@pytest.fixture(scope="session")
def config4():
    return load(SCENARIO_DIR / "config4.json")
