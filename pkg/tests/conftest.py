import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geolink.geometry import Point, Polygon, Polyline  # noqa: E402
from geolink.model import ModelConfig  # noqa: E402
from geolink.osm import GeoObject, HashedNgramProvider, TagStats, embed_object  # noqa: E402

# Filled by test_acceptance.py; printed once at the end of the run.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def toy_cfg():
    return ModelConfig(image_size=16, patch_size=4, d_patch=16, enc_depth=2, enc_heads=2,
                       dec_dim=16, dec_depth=1, dec_heads=2, d_text=16, d_node=16, d_fusion=16,
                       fusion_heads=2, d_proj=16, d_pe=16)


def tagged(oid, geom, tags=(("amenity", "bench"),), dim=16):
    obj = GeoObject(oid, geom, tags)
    return obj.with_sigma(embed_object(obj, HashedNgramProvider(dim), TagStats()))


def scene_objects(dim=16):
    """Seven objects in the unit frame with every relation family represented."""
    return [
        tagged("n/1", Point(0.1, 0.1), dim=dim),
        tagged("n/2", Point(0.9, 0.1), dim=dim),
        tagged("n/3", Point(0.5, 0.5), (("shop", "bakery"),), dim=dim),
        tagged("w/1", Polygon([[0.3, 0.3], [0.7, 0.3], [0.7, 0.7], [0.3, 0.7]]), (("building", "yes"),), dim=dim),
        tagged("w/2", Polyline([[0.0, 0.5], [1.0, 0.5]]), (("highway", "primary"),), dim=dim),
        tagged("w/3", Polyline([[0.2, 0.0], [0.2, 1.0]]), (("highway", "residential"),), dim=dim),
        tagged("w/4", Polygon([[0.6, 0.6], [0.9, 0.6], [0.9, 0.9]]), (("landuse", "grass"),), dim=dim),
    ]
