"""GLGR binary graph container and a lossy JSON view for inspection.

Layout (little-endian)::

    "GLGR" u16 version
    section "HEAD": u32 d_text, u32 n_point, u32 n_polyline, u32 n_polygon
    section "NODE" x3 (point, polyline, polygon), per node:
        str id, u32 n_tags, (str key, str value) * n_tags, geometry
      then f64 sigma[n, d_text], f64 keypoints[n, k, 2]
    section "EDGE": per family in (src, dst) type order:
        u32 m, i64 src[m], i64 dst[m], i8 rel[m]

Geometry: point = f64 x, f64 y; polyline = u32 n, f64 xy[n, 2];
polygon = u32 n_rings, then per ring u32 n, f64 xy[n, 2] (exterior first).
"""
from __future__ import annotations

import numpy as np

from ..binio import FormatError, Reader, Writer, read_section, write_section
from ..geometry import NodeType, Point, Polygon, Polyline, Relation
from ..osm.tags import GeoObject
from .builder import FAMILIES, N_KEYPOINTS, TYPES, OsmGraph

MAGIC = b"GLGR"
VERSION = 1


def _write_geom(w: Writer, g):
    if isinstance(g, Point):
        w.f64(g.x)
        w.f64(g.y)
    elif isinstance(g, Polyline):
        w.u32(len(g.vertices))
        w.array(g.vertices)
    else:
        w.u32(len(g.rings))
        for ring in g.rings:
            w.u32(len(ring))
            w.array(ring)


def _read_geom(r: Reader, t: NodeType):
    if t == NodeType.POINT:
        return Point(r.f64(), r.f64())
    if t == NodeType.POLYLINE:
        n = r.u32()
        return Polyline(r.array(2 * n).reshape(n, 2))
    rings = []
    for _ in range(r.u32()):
        n = r.u32()
        rings.append(r.array(2 * n).reshape(n, 2))
    if not rings:
        raise FormatError("polygon without exterior ring", r.pos)
    return Polygon(rings[0], tuple(rings[1:]))


def serialize_graph(g: OsmGraph) -> bytes:
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    head = Writer()
    head.u32(g.d_text)
    for n in g.counts:
        head.u32(n)
    write_section(w, b"HEAD", head.getvalue())
    for t in TYPES:
        body = Writer()
        for o in g.objects[t]:
            body.str(o.id)
            body.u32(len(o.tags))
            for k, v in o.tags:
                body.str(k)
                body.str(v)
            _write_geom(body, o.geom)
        body.array(g.sigma[t])
        body.array(g.keypoints[t])
        write_section(w, b"NODE", body.getvalue())
    body = Writer()
    for fam in FAMILIES:
        src, dst, rel = g.edges[fam]
        body.u32(len(src))
        body.array(src, "<i8")
        body.array(dst, "<i8")
        body.array(rel, "<i1")
    write_section(w, b"EDGE", body.getvalue())
    return w.getvalue()


def deserialize_graph(buf: bytes) -> OsmGraph:
    r = Reader(buf)
    r.expect(MAGIC, "graph")
    at = r.pos
    version = r.u16()
    if version != VERSION:
        raise FormatError(f"unsupported graph version {version}", at)
    head = read_section(r, b"HEAD")
    d_text = head.u32()
    counts = [head.u32() for _ in TYPES]
    objects, sigma, keypoints = [], [], []
    for t, n in zip(TYPES, counts):
        body = read_section(r, b"NODE")
        objs = []
        for _ in range(n):
            at = body.pos
            oid = body.str()
            tags = tuple((body.str(), body.str()) for _ in range(body.u32()))
            try:
                geom = _read_geom(body, t)
            except ValueError as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"invalid geometry for node {oid!r}: {exc}", at) from None
            objs.append(GeoObject(oid, geom, tags))
        sig = body.array(n * d_text).reshape(n, d_text)
        kp = body.array(n * N_KEYPOINTS[t] * 2).reshape(n, N_KEYPOINTS[t], 2)
        if not body.done():
            raise FormatError("trailing bytes in node section", body.pos)
        objects.append(tuple(GeoObject(o.id, o.geom, o.tags, s) for o, s in zip(objs, sig)))
        sigma.append(sig)
        keypoints.append(kp)
    body = read_section(r, b"EDGE")
    edges = {}
    for fam in FAMILIES:
        m = body.u32()
        edges[fam] = (body.array(m, "<i8"), body.array(m, "<i8"), body.array(m, "<i1"))
    if not body.done():
        raise FormatError("trailing bytes in edge section", body.pos)
    if not r.done():
        raise FormatError("trailing bytes after last section", r.pos)
    g = OsmGraph(tuple(objects), tuple(sigma), tuple(keypoints), edges, d_text)
    try:
        g.validate()
    except ValueError as exc:
        raise FormatError(str(exc), 0) from None
    return g


def save_graph(path, g: OsmGraph):
    with open(path, "wb") as fh:
        fh.write(serialize_graph(g))


def load_graph(path) -> OsmGraph:
    with open(path, "rb") as fh:
        return deserialize_graph(fh.read())


def _geom_json(g):
    f = lambda a: [[float(f"{x:.17g}") for x in row] for row in np.asarray(a)]
    if isinstance(g, Point):
        return {"type": "point", "xy": [g.x, g.y]}
    if isinstance(g, Polyline):
        return {"type": "polyline", "coords": f(g.vertices)}
    return {"type": "polygon", "exterior": f(g.exterior), "holes": [f(h) for h in g.holes]}


def graph_to_json(g: OsmGraph) -> dict:
    """Human-readable summary (lossy: floats at 17 significant digits, sigma omitted)."""
    nodes = {t.name.lower(): [{"id": o.id, "tags": dict(o.tags), "geometry": _geom_json(o.geom)}
                              for o in g.objects[t]] for t in TYPES}
    edges = {}
    for (s, t), (src, dst, rel) in g.edges.items():
        if len(src):
            edges[f"{s.name.lower()}->{t.name.lower()}"] = [
                [int(a), int(b), Relation(int(c)).name] for a, b, c in zip(src, dst, rel)]
    return {"format": "GLGR", "version": VERSION, "d_text": g.d_text,
            "counts": dict(zip(("point", "polyline", "polygon"), g.counts)),
            "nodes": nodes, "edges": edges}
