import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from voirie.grid4 import write_grid4


@pytest.fixture(scope="session")
def grid4(tmp_path_factory):
    """Paths of the GRID4 fixture files, generated once per session."""
    return write_grid4(tmp_path_factory.mktemp("grid4"))


@pytest.fixture
def write_fc(tmp_path):
    """Write a feature collection built from (geometry, properties) pairs."""
    import json

    def _write(name, items):
        doc = {
            "type": "FeatureCollection",
            "features": [{"type": "Feature", "geometry": g, "properties": p} for g, p in items],
        }
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    return _write
