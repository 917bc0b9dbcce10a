import json
from pathlib import Path

import numpy as np
import pytest

from geolink.binio import FormatError
from geolink.geometry import Point, Polygon, Polyline
from geolink.osm import (
    FRAME_WINDOW, CleanStats, EmbeddingError, GeoObject, HashedNgramProvider, LookupTableProvider,
    OverpassParseError, ParseStats, TagStats, clean, compute_tag_stats, embed_object,
    parse_overpass, read_glem, repair_polygon, tag_string, to_overpass, write_glem,
)

FIXTURE = Path(__file__).parent / "data" / "overpass_sample.json"


@pytest.fixture(scope="module")
def parsed():
    stats = ParseStats()
    return parse_overpass(FIXTURE.read_bytes(), stats=stats), stats


def test_fixture_counts(parsed):
    objs, stats = parsed
    assert stats.elements == 12
    assert stats.untagged == 2
    assert (stats.outside, stats.missing_geometry, stats.unsupported) == (1, 1, 1)
    assert stats.counts == {"point": 3, "polyline": 2, "polygon": 2}
    assert [o.id for o in objs] == ["node/3", "node/4", "way/10", "way/11", "way/12", "relation/20", "node/6"]


def test_fixture_geometry_in_window_frame(parsed):
    objs = {o.id: o for o in parsed[0]}
    assert objs["node/4"].geom == Point(0.125, 0.125)  # north-west corner region, y grows south
    np.testing.assert_array_equal(objs["way/10"].geom.vertices, [[0.25, 0.75], [0.75, 0.75]])
    # the path starts west of the window and is clipped at x = 0
    np.testing.assert_array_equal(objs["way/12"].geom.vertices, [[0.0, 0.5], [0.5, 0.5]])
    water = objs["relation/20"].geom
    assert isinstance(water, Polygon) and len(water.holes) == 1
    assert water.area() == pytest.approx(0.5 * 0.125 - 0.5 * 0.125 * 0.0625)


def test_tags_preserved_in_order(parsed):
    road = next(o for o in parsed[0] if o.id == "way/10")
    assert road.tags == (("highway", "residential"), ("name", "Elm Street"))


def test_malformed_json_reports_byte_offset():
    payload = '{"elements": [{"type": "node", "id": 1,, }]}'.encode()
    with pytest.raises(OverpassParseError) as err:
        parse_overpass(payload)
    assert err.value.offset == payload.index(b",,") + 1


def test_offset_counts_bytes_not_characters():
    payload = '{"elements": [{"tags": {"name": "Straße"}} x]}'.encode()
    with pytest.raises(OverpassParseError) as err:
        parse_overpass(payload)
    assert err.value.offset == payload.index(b" x") + 1


def test_invalid_utf8_and_missing_elements():
    with pytest.raises(OverpassParseError):
        parse_overpass(b'{"elements": ["\xff"]}')
    with pytest.raises(OverpassParseError):
        parse_overpass(b'{"nodes": []}')


def test_overpass_round_trip(parsed):
    objs = parsed[0]
    again = parse_overpass(to_overpass(objs), window=FRAME_WINDOW)
    assert again == objs
    assert to_overpass(again) == to_overpass(objs)


def test_clean_dedupes_keeping_richer_tags(parsed):
    stats = CleanStats()
    out = clean(parsed[0], stats)
    assert [o.id for o in out] == ["node/4", "way/10", "way/11", "way/12", "relation/20", "node/6"]
    assert stats.duplicates == 1


def test_clean_tag_rules():
    objs = [
        GeoObject("a", Point(0, 0), (("", "x"), ("k", ""), ("k", "v"), ("k", "w"), ("bad\n", "v"))),
        GeoObject("b", Point(1, 1), (("", "x"),)),
        GeoObject("a", Point(2, 2), (("k", "v"),)),
    ]
    stats = CleanStats()
    out = clean(objs, stats)
    assert [(o.id, o.tags) for o in out] == [("a", (("k", "v"),))]
    assert stats.untagged_dropped == 1
    assert stats.duplicates == 1
    assert stats.tags_removed == 4


def test_clean_geometry_rules():
    t = (("k", "v"),)
    bowtie = GeoObject("bow", Polygon([[0, 0], [1, 1], [1, 0], [0, 1]]), t)
    spiky = GeoObject("spike", Polygon([[0, 0], [1, 0], [1, 1], [1, 2], [1, 1], [0, 1]]), t)
    stutter = GeoObject("line", Polyline([[0, 0], [0, 0], [1, 1]]), t)
    degenerate = GeoObject("dot", Polyline([[0.5, 0.5], [0.5, 0.5]]), t)
    stats = CleanStats()
    out = {o.id: o for o in clean([bowtie, spiky, stutter, degenerate], stats)}
    assert set(out) == {"spike", "line"}
    assert out["spike"].geom.area() == 1.0
    assert len(out["spike"].geom.exterior) == 5
    np.testing.assert_array_equal(out["line"].geom.vertices, [[0, 0], [1, 1]])
    assert stats.invalid_dropped == 2
    assert stats.repaired == 2


def test_repair_drops_hole_outside_shell():
    poly = Polygon([[0, 0], [4, 0], [4, 4], [0, 4]],
                   holes=([[1, 1], [2, 1], [2, 2], [1, 2]], [[5, 5], [6, 5], [6, 6]]))
    fixed = repair_polygon(poly)
    assert len(fixed.holes) == 1


def test_tag_stats_and_weighted_embedding():
    corpus = [GeoObject("1", Point(0, 0), (("highway", "a"), ("name", "x"))),
              GeoObject("2", Point(0, 0), (("highway", "b"),)),
              GeoObject("3", Point(0, 0), (("highway", "c"),))]
    stats = compute_tag_stats(corpus)
    assert stats.counts == {"highway": 3, "name": 1}
    assert stats.top(1) == [("highway", 3)]
    prov = HashedNgramProvider(32)
    sigma = embed_object(corpus[0], prov, stats)
    expect = (3 * prov.embed("highway:a") + 1 * prov.embed("name:x")) / 4
    np.testing.assert_allclose(sigma, expect, atol=1e-15)
    # unseen keys weigh 1
    lone = GeoObject("4", Point(0, 0), (("shop", "x"), ("highway", "y")))
    np.testing.assert_allclose(embed_object(lone, prov, stats),
                               (prov.embed("shop:x") + 3 * prov.embed("highway:y")) / 4, atol=1e-15)


def test_tag_string():
    assert tag_string("building", "yes") == "building:yes"
    assert tag_string("a:b", "c") == "a:b:c"
    with pytest.raises(ValueError):
        tag_string("", "x")


def test_hashed_provider_is_deterministic_unit_norm():
    a, b = HashedNgramProvider(64), HashedNgramProvider(64)
    v = a.embed("highway:residential")
    assert v.tobytes() == b.embed("highway:residential").tobytes()
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert np.dot(v, a.embed("highway:primary")) > np.dot(v, a.embed("shop:bakery"))


def test_glem_round_trip_and_lookup(tmp_path):
    table = {"building:yes": np.arange(4.0), "highway:path": -np.ones(4)}
    path = tmp_path / "emb.glem"
    write_glem(path, table)
    loaded = read_glem(path)
    assert list(loaded) == list(table)
    for k in table:
        np.testing.assert_array_equal(loaded[k], table[k])
    prov = LookupTableProvider.load(path)
    np.testing.assert_array_equal(prov.embed("highway:path"), -np.ones(4))
    with pytest.raises(EmbeddingError):
        prov.embed("unknown:tag")
    fb = LookupTableProvider.load(path, fallback=HashedNgramProvider(4))
    assert fb.embed("unknown:tag").shape == (4,)


def test_glem_corruption(tmp_path):
    path = tmp_path / "bad.glem"
    write_glem(path, {"a:b": np.zeros(3)})
    raw = path.read_bytes()
    path.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError):
        read_glem(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        read_glem(path)


def test_provider_failure_is_wrapped():
    class Broken:
        dim = 3

        def embed(self, text):
            raise RuntimeError("offline")

    with pytest.raises(EmbeddingError, match="building:yes"):
        embed_object(GeoObject("x", Point(0, 0), (("building", "yes"),)), Broken(), TagStats())


def test_fixture_is_valid_json():
    assert len(json.loads(FIXTURE.read_text())["elements"]) == 12
