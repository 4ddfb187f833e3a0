import json
from pathlib import Path

import pytest

from coverplan.alignment import AdviceItem
from coverplan.io import load_region

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def table_region():
    """Four self-covering cells in two districts; gains 4, 3 | 10, 8."""
    return load_region(DATA / "table_region.json")


@pytest.fixture(scope="session")
def advice20():
    raw = json.loads((DATA / "advice20.json").read_text())
    return tuple(AdviceItem.from_dict(entry) for entry in raw)


@pytest.fixture(scope="session")
def data_dir():
    return DATA
