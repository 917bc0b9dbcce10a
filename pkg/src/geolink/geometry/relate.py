"""Topological relation between two geometries, restricted to the edge vocabulary.

The DE-9IM matrix comes from shapely (GEOS). It is reduced to one relation
with a fixed priority: Equal, Touch (interiors disjoint), Cover/Contain,
CoverBy/Within, then the pair's generic intersecting relation (Intersect for
polyline-polyline, Cross for polyline-polygon, Overlap for polygon-polygon).
"""
from __future__ import annotations

import shapely

from .shapes import Geometry, GeometryError, NodeType, Point, Polygon, Polyline, Relation

P, L, G = NodeType.POINT, NodeType.POLYLINE, NodeType.POLYGON
R = Relation

ADMISSIBLE = {
    (P, P): frozenset({R.DELAUNAY}),
    (P, L): frozenset({R.TOUCH, R.WITHIN}),
    (P, G): frozenset({R.TOUCH, R.WITHIN}),
    (L, P): frozenset({R.TOUCH, R.CONTAIN}),
    (L, L): frozenset({R.TOUCH, R.INTERSECT, R.COVER, R.COVER_BY, R.EQUAL}),
    (L, G): frozenset({R.TOUCH, R.CROSS, R.COVER_BY}),
    (G, P): frozenset({R.TOUCH, R.CONTAIN}),
    (G, L): frozenset({R.TOUCH, R.CROSS, R.COVER}),
    (G, G): frozenset({R.TOUCH, R.OVERLAP, R.COVER, R.COVER_BY, R.EQUAL}),
}

CONVERSE = {
    R.TOUCH: R.TOUCH, R.WITHIN: R.CONTAIN, R.CONTAIN: R.WITHIN,
    R.INTERSECT: R.INTERSECT, R.CROSS: R.CROSS, R.COVER: R.COVER_BY,
    R.COVER_BY: R.COVER, R.OVERLAP: R.OVERLAP, R.EQUAL: R.EQUAL,
    R.DELAUNAY: R.DELAUNAY,
}

_GENERIC = {(L, L): R.INTERSECT, (L, G): R.CROSS, (G, L): R.CROSS, (G, G): R.OVERLAP}


def to_shapely(g: Geometry):
    if isinstance(g, Point):
        return shapely.Point(g.x, g.y)
    if isinstance(g, Polyline):
        return shapely.LineString(g.vertices)
    if isinstance(g, Polygon):
        return shapely.Polygon(g.exterior, list(g.holes))
    raise TypeError(f"not a geometry: {type(g).__name__}")


def de9im(a: Geometry, b: Geometry) -> str:
    return shapely.relate(to_shapely(a), to_shapely(b))


def relation_from_matrix(kind_a: NodeType, kind_b: NodeType, m: str):
    """Reduce a DE-9IM string to one admissible relation (or ``None`` when disjoint)."""
    ii, ib, _, bi, bb, _, _, _, _ = (c != "F" for c in m)
    a_covers_b = m[6] == "F" and m[7] == "F"
    b_covers_a = m[2] == "F" and m[5] == "F"
    if not (ii or ib or bi or bb):
        return None
    if a_covers_b and b_covers_a:
        rel = R.EQUAL
    elif not ii:
        rel = R.TOUCH
    elif a_covers_b:
        rel = R.CONTAIN if kind_b == P else R.COVER
    elif b_covers_a:
        rel = R.WITHIN if kind_a == P else R.COVER_BY
    else:
        rel = _GENERIC[(kind_a, kind_b)]
    if rel not in ADMISSIBLE[(kind_a, kind_b)]:
        raise GeometryError(f"relation {rel.name} is not admissible for "
                            f"{kind_a.name}-{kind_b.name} (matrix {m})")
    return rel


def relate(a: Geometry, b: Geometry):
    """Single admissible relation holding between ``a`` and ``b``, or ``None``.

    Point-point pairs are rejected: their adjacency comes from Delaunay edges.
    """
    if a.kind == P and b.kind == P:
        raise GeometryError("point-point pairs are connected by Delaunay edges, not relate()")
    return relation_from_matrix(a.kind, b.kind, de9im(a, b))
