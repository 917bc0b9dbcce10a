"""Rule-based cleaning of parsed OSM objects."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import shapely

from ..geometry import GeometryError, Point, Polygon, Polyline, is_simple_ring, signed_area
from .tags import GeoObject

log = logging.getLogger(__name__)


@dataclass
class CleanStats:
    tags_removed: int = 0
    invalid_dropped: int = 0
    repaired: int = 0
    duplicates: int = 0
    untagged_dropped: int = 0


def _tag_ok(key: str, value: str) -> bool:
    return bool(key) and bool(value) and key.isprintable() and value.isprintable()


def _drop_repeats(coords: np.ndarray) -> np.ndarray:
    keep = np.ones(len(coords), dtype=bool)
    keep[1:] = np.any(coords[1:] != coords[:-1], axis=1)
    return coords[keep]


def simplify_ring(ring: np.ndarray) -> np.ndarray | None:
    """Remove repeated vertices, zero-width spikes and collinear vertices from a closed ring."""
    pts = _drop_repeats(np.asarray(ring, dtype=np.float64))
    if len(pts) and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        n = len(pts)
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross == 0.0:
                pts = np.delete(pts, i, axis=0)
                changed = True
                break
    if len(pts) < 3:
        return None
    return np.vstack([pts, pts[:1]])


def repair_polygon(poly: Polygon) -> Polygon | None:
    ext = simplify_ring(poly.exterior)
    if ext is None or not is_simple_ring(ext):
        return None
    shell = shapely.Polygon(ext)
    holes = []
    for h in poly.holes:
        hr = simplify_ring(h)
        if hr is not None and is_simple_ring(hr) and shell.contains(shapely.Polygon(hr)):
            holes.append(hr)
    try:
        out = Polygon(ext, tuple(holes)).oriented()
    except GeometryError:
        return None
    if not shapely.Polygon(out.exterior, list(out.holes)).is_valid:
        out = Polygon(out.exterior)
    return out if abs(signed_area(out.exterior)) > 0 else None


def _canonical_key(obj: GeoObject):
    g = obj.geom
    if isinstance(g, Point):
        return ("point", g.x, g.y)
    if isinstance(g, Polyline):
        v = g.vertices
        fwd, rev = v.tobytes(), v[::-1].tobytes()
        return ("polyline", min(fwd, rev))
    rings = []
    for r in (g.oriented().rings):
        open_r = r[:-1]
        k = min(range(len(open_r)), key=lambda i: (open_r[i, 0], open_r[i, 1]))
        rings.append(np.roll(open_r, -k, axis=0).tobytes())
    return ("polygon", rings[0], tuple(sorted(rings[1:])))


def clean(objects, stats: CleanStats | None = None) -> list:
    """Filter bad tags, repair or drop invalid geometry, and deduplicate.

    Order of surviving objects is preserved. Among exact geometric duplicates
    the object with the most tags is kept (first one on ties).
    """
    stats = CleanStats() if stats is None else stats
    staged = []
    seen_ids = set()
    for obj in objects:
        if obj.id in seen_ids:
            stats.duplicates += 1
            continue
        seen_ids.add(obj.id)
        tags = tuple((k, v) for k, v in obj.tags if _tag_ok(k, v))
        stats.tags_removed += len(obj.tags) - len(tags)
        keys = set()
        tags = tuple(kv for kv in tags if not (kv[0] in keys or keys.add(kv[0])))
        if not tags:
            stats.untagged_dropped += 1
            continue
        g = obj.geom
        if isinstance(g, Polyline):
            v = _drop_repeats(g.vertices)
            if len(v) < 2:
                stats.invalid_dropped += 1
                continue
            if len(v) != len(g.vertices):
                stats.repaired += 1
                g = Polyline(v)
        elif isinstance(g, Polygon):
            fixed = repair_polygon(g)
            if fixed is None:
                stats.invalid_dropped += 1
                continue
            if fixed != g:
                stats.repaired += 1
            g = fixed
        staged.append(GeoObject(obj.id, g, tags, obj.sigma))

    best = {}
    for i, obj in enumerate(staged):
        key = _canonical_key(obj)
        j = best.get(key)
        if j is None or len(obj.tags) > len(staged[j].tags):
            best[key] = i
    keep = sorted(best.values())
    stats.duplicates += len(staged) - len(keep)
    return [staged[i] for i in keep]
