"""Centroids, point-in-polygon and key-point sampling for position embeddings."""
from __future__ import annotations

import numpy as np
import shapely

from .. import kernels
from .shapes import Geometry, Point, Polygon, Polyline, signed_area

MAX_ATTEMPTS = 64


def locate(points, poly: Polygon) -> np.ndarray:
    """Location codes (0 outside, 1 boundary, 2 inside) for an ``(n, 2)`` array of points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    rx, ry, starts = poly.ring_arrays()
    return kernels.locate_points(pts[:, 0], pts[:, 1], rx, ry, starts)


def point_in_polygon(pt, poly: Polygon) -> bool:
    """Strict interior test; boundary points and points inside holes are outside."""
    return bool(locate(np.asarray(pt, dtype=np.float64), poly)[0] == kernels.INSIDE)


def centroid(poly: Polygon) -> np.ndarray:
    """Area-weighted centroid of the exterior minus holes (vertex mean if the area is zero)."""
    poly = poly.oriented()
    area = 0.0
    cx = cy = 0.0
    for ring in poly.rings:
        x0, y0 = ring[:-1, 0], ring[:-1, 1]
        x1, y1 = ring[1:, 0], ring[1:, 1]
        cross = x0 * y1 - x1 * y0
        area += 0.5 * cross.sum()
        cx += ((x0 + x1) * cross).sum()
        cy += ((y0 + y1) * cross).sum()
    scale = max(np.abs(poly.exterior).max(), 1.0)
    if abs(area) <= 1e-14 * scale * scale:
        return poly.exterior[:-1].mean(axis=0)
    return np.array([cx / (6.0 * area), cy / (6.0 * area)])


def arc_midpoint(line: Polyline) -> np.ndarray:
    v = line.vertices
    seg = np.hypot(*np.diff(v, axis=0).T)
    total = seg.sum()
    if total == 0.0:
        return v[0].copy()
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    half = 0.5 * total
    k = int(np.searchsorted(cum, half, side="right") - 1)
    k = min(k, len(seg) - 1)
    t = (half - cum[k]) / seg[k] if seg[k] > 0 else 0.0
    return v[k] + t * (v[k + 1] - v[k])


def sample_keypoints(g: Geometry, rng: np.random.Generator, n_interior: int = 3) -> np.ndarray:
    """Representative points of a geometry as a ``(k, 2)`` array.

    point -> the point; polyline -> first vertex, arc-length midpoint, last
    vertex; polygon -> centroid followed by ``n_interior`` points drawn at
    uniform radius in ``[0, R_max)`` and uniform angle around the centroid,
    rejected until strictly inside. A sample that fails ``MAX_ATTEMPTS`` times
    is replaced by the centroid.
    """
    if isinstance(g, Point):
        return np.array([[g.x, g.y]])
    if isinstance(g, Polyline):
        v = g.vertices
        return np.stack([v[0], arc_midpoint(g), v[-1]])
    c = centroid(g)
    r_max = float(np.hypot(*(g.exterior - c).T).max())
    out = [c]
    for _ in range(n_interior):
        r = rng.uniform(0.0, r_max, size=MAX_ATTEMPTS)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=MAX_ATTEMPTS)
        cand = c + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        ok = np.flatnonzero(locate(cand, g) == kernels.INSIDE)
        out.append(cand[ok[0]] if len(ok) else c.copy())
    return np.stack(out)


def is_simple_ring(ring) -> bool:
    """True when a closed ring has no self-intersections and nonzero area."""
    ring = np.asarray(ring, dtype=np.float64)
    if len(ring) < 4:
        return False
    lr = shapely.LinearRing(ring)
    return bool(lr.is_simple) and abs(signed_area(ring)) > 0.0
