"""Geometry value types: points, polylines and polygons in image-frame coordinates."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class GeometryError(ValueError):
    pass


class NodeType(enum.IntEnum):
    POINT = 0
    POLYLINE = 1
    POLYGON = 2


class Relation(enum.IntEnum):
    """Edge relation vocabulary; the integer value is the one-hot position."""

    TOUCH = 0
    WITHIN = 1
    CONTAIN = 2
    INTERSECT = 3
    CROSS = 4
    COVER = 5
    COVER_BY = 6
    OVERLAP = 7
    EQUAL = 8
    DELAUNAY = 9


N_RELATIONS = len(Relation)


def _as_coords(values, min_len: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] < min_len:
        raise GeometryError(f"{what} needs at least {min_len} vertices, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise GeometryError(f"{what} has non-finite coordinates")
    arr.flags.writeable = False
    return arr


def signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]))


def close_ring(coords) -> np.ndarray:
    arr = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    if arr.shape[0] and not np.array_equal(arr[0], arr[-1]):
        arr = np.vstack([arr, arr[:1]])
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    x: float
    y: float

    kind = NodeType.POINT

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise GeometryError("point has non-finite coordinates")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @property
    def coords(self) -> np.ndarray:
        return np.array([[self.x, self.y]])

    def __eq__(self, other):
        return isinstance(other, Point) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash((self.x, self.y))

    def __repr__(self):
        return f"Point({self.x!r}, {self.y!r})"


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray

    kind = NodeType.POLYLINE

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_coords(self.vertices, 2, "polyline"))

    @property
    def coords(self) -> np.ndarray:
        return self.vertices

    def length(self) -> float:
        return float(np.hypot(*np.diff(self.vertices, axis=0).T).sum())

    def __eq__(self, other):
        return isinstance(other, Polyline) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        return f"Polyline({self.vertices.tolist()!r})"


@dataclass(frozen=True, eq=False)
class Polygon:
    """Closed exterior ring (first vertex repeated last) plus optional holes.

    Rings are stored as given; :meth:`oriented` returns a copy with a
    counter-clockwise exterior and clockwise holes.
    """

    exterior: np.ndarray
    holes: tuple = field(default=())

    kind = NodeType.POLYGON

    def __post_init__(self):
        ext = _as_coords(close_ring(self.exterior), 4, "polygon exterior")
        holes = tuple(_as_coords(close_ring(h), 4, "polygon hole") for h in self.holes)
        object.__setattr__(self, "exterior", ext)
        object.__setattr__(self, "holes", holes)

    @property
    def coords(self) -> np.ndarray:
        return self.exterior

    @property
    def rings(self) -> tuple:
        return (self.exterior,) + self.holes

    def area(self) -> float:
        return abs(signed_area(self.exterior)) - sum(abs(signed_area(h)) for h in self.holes)

    def oriented(self) -> "Polygon":
        ext = self.exterior if signed_area(self.exterior) > 0 else self.exterior[::-1]
        holes = tuple(h if signed_area(h) < 0 else h[::-1] for h in self.holes)
        return Polygon(ext, holes)

    def ring_arrays(self):
        """Flattened ring coordinates and offsets for :func:`geolink.kernels.locate_points`."""
        rings = self.rings
        starts = np.cumsum([0] + [len(r) for r in rings]).astype(np.int64)
        flat = np.vstack(rings)
        return flat[:, 0].copy(), flat[:, 1].copy(), starts

    def __eq__(self, other):
        return (isinstance(other, Polygon)
                and np.array_equal(self.exterior, other.exterior)
                and len(self.holes) == len(other.holes)
                and all(np.array_equal(a, b) for a, b in zip(self.holes, other.holes)))

    def __hash__(self):
        return hash((self.exterior.tobytes(),) + tuple(h.tobytes() for h in self.holes))

    def __repr__(self):
        if self.holes:
            return f"Polygon({self.exterior.tolist()!r}, holes={[h.tolist() for h in self.holes]!r})"
        return f"Polygon({self.exterior.tolist()!r})"


Geometry = Union[Point, Polyline, Polygon]


def bounds(g: Geometry) -> tuple:
    c = g.coords
    return (float(c[:, 0].min()), float(c[:, 1].min()), float(c[:, 0].max()), float(c[:, 1].max()))
