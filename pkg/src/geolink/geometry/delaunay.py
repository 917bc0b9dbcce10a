"""Delaunay triangulation of small point sets.

A left-to-right sweep builds an initial triangulation, then Lawson edge flips
make every interior edge locally Delaunay. Predicates are float filters with
an exact ``Fraction`` fallback near zero, so no super-triangle is needed and
hull edges come out exact.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .. import kernels

_CCW_BOUND = 3.3306690738754716e-16
_ICC_BOUND = 1.1102230246251577e-15


def orient(a, b, c) -> int:
    """Sign of the signed area of triangle ``abc`` (+1 counter-clockwise)."""
    l = (b[0] - a[0]) * (c[1] - a[1])
    r = (b[1] - a[1]) * (c[0] - a[0])
    det = l - r
    if abs(det) > _CCW_BOUND * (abs(l) + abs(r)):
        return 1 if det > 0 else -1
    fa = [Fraction(v) for v in a]
    fb = [Fraction(v) for v in b]
    fc = [Fraction(v) for v in c]
    det = (fb[0] - fa[0]) * (fc[1] - fa[1]) - (fb[1] - fa[1]) * (fc[0] - fa[0])
    return (det > 0) - (det < 0)


def incircle(a, b, c, d) -> int:
    """+1 if ``d`` is strictly inside the circle through ccw triangle ``abc``."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bc = bdx * cdy - cdx * bdy
    ca = cdx * ady - adx * cdy
    ab = adx * bdy - bdx * ady
    det = alift * bc + blift * ca + clift * ab
    perm = (alift * (abs(bdx * cdy) + abs(cdx * bdy))
            + blift * (abs(cdx * ady) + abs(adx * cdy))
            + clift * (abs(adx * bdy) + abs(bdx * ady)))
    if abs(det) > _ICC_BOUND * perm:
        return 1 if det > 0 else -1
    fa, fb, fc, fd = ([Fraction(v) for v in p] for p in (a, b, c, d))
    adx, ady = fa[0] - fd[0], fa[1] - fd[1]
    bdx, bdy = fb[0] - fd[0], fb[1] - fd[1]
    cdx, cdy = fc[0] - fd[0], fc[1] - fd[1]
    det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
           + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
           + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return (det > 0) - (det < 0)


def _chain(order) -> list:
    return [tuple(sorted((int(order[i]), int(order[i + 1])))) for i in range(len(order) - 1)]


def triangulate(points) -> list:
    """Delaunay triangles as counter-clockwise index triples.

    Returns an empty list when fewer than three points are given or all points
    are collinear.
    """
    pts = [tuple(map(float, p)) for p in np.asarray(points, dtype=np.float64).reshape(-1, 2)]
    n = len(pts)
    if n < 3:
        return []
    order = sorted(range(n), key=lambda i: pts[i])
    k = 2
    while k < n and orient(pts[order[0]], pts[order[1]], pts[order[k]]) == 0:
        k += 1
    if k == n:
        return []

    opp = {}  # directed edge (a, b) -> third vertex of the ccw triangle (a, b, c)

    def add(a, b, c):
        opp[(a, b)] = c
        opp[(b, c)] = a
        opp[(c, a)] = b

    def remove(a, b, c):
        del opp[(a, b)], opp[(b, c)], opp[(c, a)]

    chain = order[:k]
    p = order[k]
    for a, b in zip(chain[:-1], chain[1:]):
        if orient(pts[a], pts[b], pts[p]) > 0:
            add(a, b, p)
        else:
            add(b, a, p)
    if orient(pts[chain[0]], pts[chain[-1]], pts[p]) > 0:
        hull = list(chain) + [p]
    else:
        hull = list(reversed(chain)) + [p]

    for p in order[k + 1:]:
        h = len(hull)
        visible = [orient(pts[hull[i]], pts[hull[(i + 1) % h]], pts[p]) < 0 for i in range(h)]
        # rotate so the visible run is contiguous and starts at index 0
        start = next(i for i in range(h) if visible[i] and not visible[i - 1])
        hull = hull[start:] + hull[:start]
        visible = visible[start:] + visible[:start]
        run = visible.index(False) if False in visible else h
        for i in range(run):
            a, b = hull[i], hull[(i + 1) % h]
            add(b, a, p)
        hull = [hull[0], p] + hull[run:]

    stack = [e for e in opp if (e[1], e[0]) in opp]
    while stack:
        a, b = stack.pop()
        c = opp.get((a, b))
        d = opp.get((b, a))
        if c is None or d is None:
            continue
        if incircle(pts[a], pts[b], pts[c], pts[d]) > 0:
            remove(a, b, c)
            remove(b, a, d)
            add(a, d, c)
            add(d, b, c)
            stack.extend([(a, d), (d, b), (b, c), (c, a)])

    tris = set()
    for (a, b), c in opp.items():
        tris.add(min((a, b, c), (b, c, a), (c, a, b)))
    return sorted(tris)


def delaunay_edges(points) -> list:
    """Undirected Delaunay edges as sorted ``(lo, hi)`` index pairs.

    Fewer than two points give no edges; an all-collinear input falls back to
    a chain through the points sorted along the line.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    tris = triangulate(pts)
    if not tris:
        order = sorted(range(n), key=lambda i: (pts[i, 0], pts[i, 1]))
        return sorted(set(_chain(order)))
    edges = set()
    for a, b, c in tris:
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((min(u, v), max(u, v)))
    return sorted(edges)


def circumcircle_violations(points, triangles) -> int:
    """Count (triangle, point) pairs where the point lies strictly inside the circumcircle."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if not len(tris):
        return 0
    corners = pts[tris]
    bad = 0
    for i, p in enumerate(pts):
        hit = kernels.incircle(corners, p)
        hit &= ~(tris == i).any(axis=1)
        bad += int(hit.sum())
    return bad
