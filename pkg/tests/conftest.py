import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from teleopspace import storage

DATA = Path(__file__).resolve().parents[1] / "src" / "teleopspace" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def schunk():
    return storage.load_hand_model(DATA / "schunk.json")


@pytest.fixture(scope="session")
def human():
    return storage.load_hand_model(DATA / "human.json")


@pytest.fixture(scope="session")
def gripper():
    return storage.load_hand_model(DATA / "gripper2f.json")


@pytest.fixture(scope="session")
def schunk_map():
    return storage.load_mapping(DATA / "schunk-empirical-map.json")


@pytest.fixture(scope="session")
def human_map():
    return storage.load_mapping(DATA / "human-empirical-map.json")
