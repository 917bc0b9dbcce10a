"""Overpass JSON -> :class:`GeoObject` list, and the reverse for round trips.

Coordinates are mapped into the sample window: ``x`` grows east, ``y`` grows
south (image rows), both normalised to ``[0, 1]``; geometry reaching outside
the window is clipped to it.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from ..geometry import GeometryError, Point, Polygon, Polyline, clip_geometry, signed_area
from .tags import GeoObject

log = logging.getLogger(__name__)

UNIT_BOX = (0.0, 0.0, 1.0, 1.0)


class OverpassParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Window:
    min_lon: float
    min_lat: float
    max_lon: float
    max_lat: float

    def to_xy(self, lon, lat):
        x = (np.asarray(lon, dtype=np.float64) - self.min_lon) / (self.max_lon - self.min_lon)
        y = (self.max_lat - np.asarray(lat, dtype=np.float64)) / (self.max_lat - self.min_lat)
        return x, y


FRAME_WINDOW = Window(0.0, -1.0, 1.0, 0.0)  # lon = x, lat = -y round-trips exactly


@dataclass
class ParseStats:
    elements: int = 0
    untagged: int = 0
    missing_geometry: int = 0
    unsupported: int = 0
    outside: int = 0
    counts: dict = field(default_factory=lambda: {"point": 0, "polyline": 0, "polygon": 0})


def _decode(payload):
    if isinstance(payload, (bytes, bytearray, memoryview)):
        raw = bytes(payload)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise OverpassParseError("payload is not valid UTF-8", exc.start) from None
    else:
        text = str(payload)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise OverpassParseError(f"malformed JSON: {exc.msg}", offset) from None


def _coords(seq):
    return np.array([[float(p["lon"]), float(p["lat"])] for p in seq], dtype=np.float64)


def _way_lonlat(el, nodes):
    if el.get("geometry"):
        try:
            return _coords(el["geometry"])
        except (KeyError, TypeError, ValueError):
            return None
    refs = el.get("nodes")
    if not refs or any(r not in nodes for r in refs):
        return None
    return np.array([nodes[r] for r in refs], dtype=np.float64)


def _assemble_rings(parts):
    """Join open way pieces end to end into closed rings."""
    parts = [p for p in parts if len(p) >= 2]
    rings = []
    while parts:
        cur = parts.pop(0)
        while not np.array_equal(cur[0], cur[-1]):
            for i, p in enumerate(parts):
                if np.array_equal(cur[-1], p[0]):
                    cur = np.vstack([cur, p[1:]])
                elif np.array_equal(cur[-1], p[-1]):
                    cur = np.vstack([cur, p[::-1][1:]])
                else:
                    continue
                parts.pop(i)
                break
            else:
                break
        if np.array_equal(cur[0], cur[-1]) and len(cur) >= 4:
            rings.append(cur)
    return rings


def _default_window(doc, elements) -> Window:
    b = doc.get("bounds")
    if isinstance(b, dict) and {"minlon", "minlat", "maxlon", "maxlat"} <= b.keys():
        return Window(float(b["minlon"]), float(b["minlat"]), float(b["maxlon"]), float(b["maxlat"]))
    lons, lats = [], []
    for el in elements:
        if "lon" in el and "lat" in el:
            lons.append(float(el["lon"]))
            lats.append(float(el["lat"]))
        for p in el.get("geometry") or []:
            if isinstance(p, dict) and "lon" in p:
                lons.append(float(p["lon"]))
                lats.append(float(p["lat"]))
    if not lons:
        return FRAME_WINDOW
    w = Window(min(lons), min(lats), max(lons), max(lats))
    if w.max_lon == w.min_lon or w.max_lat == w.min_lat:
        return Window(w.min_lon - 0.5, w.min_lat - 0.5, w.max_lon + 0.5, w.max_lat + 0.5)
    return w


def parse_overpass(payload, window: Window | None = None, stats: ParseStats | None = None) -> list:
    """Tagged nodes become points, closed ways polygons, open ways polylines and
    ``type=multipolygon`` relations polygons with holes. Untagged and other
    relation elements are dropped; elements without usable geometry are skipped
    and counted in ``stats``.
    """
    doc = _decode(payload)
    if not isinstance(doc, dict) or not isinstance(doc.get("elements"), list):
        raise OverpassParseError("document has no 'elements' array", 0)
    stats = ParseStats() if stats is None else stats
    elements = doc["elements"]
    window = _default_window(doc, elements) if window is None else window

    nodes = {}
    for el in elements:
        if isinstance(el, dict) and el.get("type") == "node" and "lon" in el and "lat" in el:
            nodes[el.get("id")] = (float(el["lon"]), float(el["lat"]))

    out = []
    for el in elements:
        stats.elements += 1
        if not isinstance(el, dict):
            stats.unsupported += 1
            continue
        etype, tags = el.get("type"), el.get("tags") or {}
        if not tags:
            stats.untagged += 1
            continue
        geom = None
        try:
            if etype == "node":
                if "lon" not in el or "lat" not in el:
                    stats.missing_geometry += 1
                    continue
                x, y = window.to_xy(float(el["lon"]), float(el["lat"]))
                geom = Point(x, y)
            elif etype == "way":
                ll = _way_lonlat(el, nodes)
                if ll is None or len(ll) < 2:
                    stats.missing_geometry += 1
                    continue
                x, y = window.to_xy(ll[:, 0], ll[:, 1])
                xy = np.stack([x, y], axis=1)
                refs = el.get("nodes")
                closed = (refs[0] == refs[-1]) if refs else np.array_equal(ll[0], ll[-1])
                if closed and len(xy) >= 4:
                    geom = Polygon(xy)
                else:
                    geom = Polyline(xy)
            elif etype == "relation" and tags.get("type") == "multipolygon":
                outer, inner = [], []
                for m in el.get("members") or []:
                    if m.get("type") != "way" or not m.get("geometry"):
                        continue
                    ll = _coords(m["geometry"])
                    x, y = window.to_xy(ll[:, 0], ll[:, 1])
                    (inner if m.get("role") == "inner" else outer).append(np.stack([x, y], axis=1))
                outer_rings = _assemble_rings(outer)
                if not outer_rings:
                    stats.missing_geometry += 1
                    continue
                ext = max(outer_rings, key=lambda r: abs(signed_area(r)))
                geom = Polygon(ext, tuple(_assemble_rings(inner)))
            else:
                stats.unsupported += 1
                continue
        except (GeometryError, KeyError, TypeError, ValueError) as exc:
            log.warning("skipping %s/%s: %s", etype, el.get("id"), exc)
            stats.missing_geometry += 1
            continue
        clipped = clip_geometry(geom, UNIT_BOX)
        if clipped is None:
            stats.outside += 1
            continue
        stats.counts[clipped.kind.name.lower()] += 1
        out.append(GeoObject(f"{etype}/{el.get('id')}", clipped, tuple(tags.items())))
    if stats.missing_geometry:
        log.warning("%d elements skipped for missing geometry", stats.missing_geometry)
    return out


def _lonlat(xy):
    return [{"lat": -float(y), "lon": float(x)} for x, y in np.asarray(xy).reshape(-1, 2)]


def to_overpass(objects) -> bytes:
    """Serialise objects in frame coordinates (``lon = x``, ``lat = -y``) with unit bounds."""
    elements = []
    for i, obj in enumerate(objects):
        etype, _, eid = obj.id.partition("/")
        try:
            eid = int(eid)
        except ValueError:
            eid = i + 1
        tags = dict(obj.tags)
        g = obj.geom
        if isinstance(g, Point):
            elements.append({"type": "node", "id": eid, "lat": -g.y, "lon": g.x, "tags": tags})
        elif isinstance(g, Polyline):
            elements.append({"type": "way", "id": eid, "geometry": _lonlat(g.vertices), "tags": tags})
        elif g.holes or etype == "relation":
            members = [{"type": "way", "role": "outer", "geometry": _lonlat(g.exterior)}]
            members += [{"type": "way", "role": "inner", "geometry": _lonlat(h)} for h in g.holes]
            tags.setdefault("type", "multipolygon")
            elements.append({"type": "relation", "id": eid, "members": members, "tags": tags})
        else:
            elements.append({"type": "way", "id": eid, "geometry": _lonlat(g.exterior), "tags": tags})
    doc = {
        "version": 0.6,
        "bounds": {"minlon": 0.0, "minlat": -1.0, "maxlon": 1.0, "maxlat": 0.0},
        "elements": elements,
    }
    return json.dumps(doc).encode("utf-8")
