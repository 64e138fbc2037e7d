import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def fixtures():
    return pathlib.Path(os.environ.get("CHANGEGPT_FIXTURES_DIR", ROOT / "data" / "fixtures"))
