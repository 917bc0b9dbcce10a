"""Crop / flip transforms applied identically to images and vector geometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .shapes import Geometry, GeometryError, Point, Polygon, Polyline, signed_area


@dataclass(frozen=True)
class SampleTransform:
    """Crop window in source normalized coordinates plus a horizontal flip."""

    x0: float = 0.0
    y0: float = 0.0
    width: float = 1.0
    height: float = 1.0
    flip: bool = False

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise GeometryError("crop window must have positive size")
        eps = 1e-12
        if (self.x0 < -eps or self.y0 < -eps or self.x0 + self.width > 1 + eps
                or self.y0 + self.height > 1 + eps):
            raise GeometryError("crop window must lie inside the source frame")

    @property
    def is_identity(self) -> bool:
        return (self.x0, self.y0, self.width, self.height, self.flip) == (0.0, 0.0, 1.0, 1.0, False)

    def map_xy(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        u = (xy[..., 0] - self.x0) / self.width
        v = (xy[..., 1] - self.y0) / self.height
        u = np.clip(u, 0.0, 1.0)
        v = np.clip(v, 0.0, 1.0)
        if self.flip:
            u = 1.0 - u
        return np.stack([u, v], axis=-1)


def clip_segment(p, q, xmin, ymin, xmax, ymax):
    """Liang-Barsky parametric clip; returns ``(t0, t1)`` or ``None``."""
    dx, dy = q[0] - p[0], q[1] - p[1]
    t0, t1 = 0.0, 1.0
    for den, num in ((-dx, p[0] - xmin), (dx, xmax - p[0]), (-dy, p[1] - ymin), (dy, ymax - p[1])):
        if den == 0.0:
            if num < 0.0:
                return None
            continue
        t = num / den
        if den < 0.0:
            if t > t1:
                return None
            t0 = max(t0, t)
        else:
            if t < t0:
                return None
            t1 = min(t1, t)
    return t0, t1


def _dedupe(coords: np.ndarray) -> np.ndarray:
    if len(coords) < 2:
        return coords
    keep = np.ones(len(coords), dtype=bool)
    keep[1:] = np.any(coords[1:] != coords[:-1], axis=1)
    return coords[keep]


def clip_polyline(v: np.ndarray, box) -> np.ndarray | None:
    """Clip to the box; when the line leaves and re-enters, the longest piece is kept."""
    pieces, cur = [], []
    for p, q in zip(v[:-1], v[1:]):
        tt = clip_segment(p, q, *box)
        if tt is None:
            if cur:
                pieces.append(cur)
                cur = []
            continue
        t0, t1 = tt
        a = p if t0 == 0.0 else p + t0 * (q - p)
        b = q if t1 == 1.0 else p + t1 * (q - p)
        if cur and (t0 != 0.0 or not np.array_equal(cur[-1], a)):
            pieces.append(cur)
            cur = []
        if not cur:
            cur.append(np.asarray(a, dtype=np.float64))
        cur.append(np.asarray(b, dtype=np.float64))
        if t1 != 1.0:
            pieces.append(cur)
            cur = []
    if cur:
        pieces.append(cur)
    best, best_len = None, -1.0
    for piece in pieces:
        arr = _dedupe(np.array(piece))
        if len(arr) < 2:
            continue
        length = np.hypot(*np.diff(arr, axis=0).T).sum()
        if length > best_len:
            best, best_len = arr, length
    return best


def clip_ring(ring: np.ndarray, box) -> np.ndarray:
    """Sutherland-Hodgman clip of a closed ring against an axis-aligned box (open ring out)."""
    xmin, ymin, xmax, ymax = box
    pts = list(ring[:-1])
    planes = ((0, xmin, 1.0), (0, xmax, -1.0), (1, ymin, 1.0), (1, ymax, -1.0))
    for axis, bound, sign in planes:
        if not pts:
            break
        out = []
        prev = pts[-1]
        prev_in = sign * (prev[axis] - bound) >= 0.0
        for cur in pts:
            cur_in = sign * (cur[axis] - bound) >= 0.0
            if cur_in != prev_in:
                t = (bound - prev[axis]) / (cur[axis] - prev[axis])
                x = prev + t * (cur - prev)
                x[axis] = bound
                out.append(x)
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
        pts = out
    return _dedupe(np.array(pts).reshape(-1, 2))


def _ring_ok(open_ring: np.ndarray) -> bool:
    if len(open_ring) >= 2 and np.array_equal(open_ring[0], open_ring[-1]):
        open_ring = open_ring[:-1]
    if len(open_ring) < 3:
        return False
    closed = np.vstack([open_ring, open_ring[:1]])
    return abs(signed_area(closed)) > 0.0


def clip_geometry(g: Geometry, box) -> Geometry | None:
    """Clip to the axis-aligned ``box`` without rescaling; ``None`` if nothing survives."""
    if isinstance(g, Point):
        if box[0] <= g.x <= box[2] and box[1] <= g.y <= box[3]:
            return g
        return None
    if isinstance(g, Polyline):
        v = clip_polyline(g.vertices, box)
        return Polyline(v) if v is not None else None
    ext = clip_ring(g.exterior, box)
    if not _ring_ok(ext):
        return None
    holes = tuple(hc for hc in (clip_ring(h, box) for h in g.holes) if _ring_ok(hc))
    return Polygon(ext, holes).oriented()


def _map_geometry(g: Geometry, t: SampleTransform) -> Geometry | None:
    if isinstance(g, Point):
        u, v = t.map_xy(np.array([g.x, g.y]))
        return Point(u, v)
    if isinstance(g, Polyline):
        v = _dedupe(t.map_xy(g.vertices))
        return Polyline(v) if len(v) >= 2 else None
    ext = _dedupe(t.map_xy(g.exterior))
    if not _ring_ok(ext):
        return None
    holes = []
    for h in g.holes:
        hm = _dedupe(t.map_xy(h))
        if _ring_ok(hm):
            holes.append(hm)
    return Polygon(ext, tuple(holes)).oriented()


def apply_transform(g: Geometry, t: SampleTransform) -> Geometry | None:
    """Clip to the crop window, rescale to the unit frame, then mirror in x if flipped.

    Returns ``None`` when nothing of the geometry survives or it drops below
    its minimum vertex count. Polygons come back closed and counter-clockwise.
    """
    if t.is_identity:
        return g
    clipped = clip_geometry(g, (t.x0, t.y0, t.x0 + t.width, t.y0 + t.height))
    if clipped is None:
        return None
    return _map_geometry(clipped, t)
