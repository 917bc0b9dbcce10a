"""Heterogeneous object graph: typed nodes, nine directed edge families, node masking."""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
import shapely

from ..geometry import (
    ADMISSIBLE, CONVERSE, N_RELATIONS, NodeType, Relation,
    delaunay_edges, relation_from_matrix, sample_keypoints, to_shapely,
)

TYPES = (NodeType.POINT, NodeType.POLYLINE, NodeType.POLYGON)
FAMILIES = tuple((s, t) for s in TYPES for t in TYPES)
N_KEYPOINTS = {NodeType.POINT: 1, NodeType.POLYLINE: 3, NodeType.POLYGON: 4}


def _empty_edges():
    return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int8))


@dataclass(eq=False)
class OsmGraph:
    """Nodes grouped by type (sorted by object id) and edges grouped by ``(src type, dst type)``.

    ``edges[(s, t)]`` is ``(src, dst, rel)``: int64 node indices into type ``s``
    and type ``t`` plus int8 :class:`Relation` codes.
    """

    objects: tuple  # three tuples of GeoObject
    sigma: tuple  # three float64 arrays [n_t, d_text]
    keypoints: tuple  # three float64 arrays [n_t, k_t, 2]
    edges: dict = field(default_factory=dict)
    d_text: int = 0

    def __post_init__(self):
        for fam in FAMILIES:
            self.edges.setdefault(fam, _empty_edges())

    def count(self, t) -> int:
        return len(self.objects[int(t)])

    @property
    def counts(self) -> tuple:
        return tuple(len(o) for o in self.objects)

    @property
    def num_nodes(self) -> int:
        return sum(self.counts)

    @property
    def num_edges(self) -> int:
        return sum(len(e[0]) for e in self.edges.values())

    def ids(self, t) -> tuple:
        return tuple(o.id for o in self.objects[int(t)])

    def onehot(self, family) -> np.ndarray:
        rel = self.edges[family][2]
        out = np.zeros((len(rel), N_RELATIONS))
        out[np.arange(len(rel)), rel] = 1.0
        return out

    def validate(self):
        for (s, t), (src, dst, rel) in self.edges.items():
            if not (len(src) == len(dst) == len(rel)):
                raise ValueError(f"edge arrays of family {s.name}-{t.name} differ in length")
            if len(src) and (src.min() < 0 or src.max() >= self.count(s)
                             or dst.min() < 0 or dst.max() >= self.count(t)):
                raise ValueError(f"edge index out of range in family {s.name}-{t.name}")
            bad = set(int(r) for r in rel) - {int(r) for r in ADMISSIBLE[(s, t)]}
            if bad:
                raise ValueError(f"inadmissible relations {sorted(bad)} in family {s.name}-{t.name}")
        for t in TYPES:
            n = self.count(t)
            if self.sigma[t].shape != (n, self.d_text):
                raise ValueError(f"sigma for {t.name} has shape {self.sigma[t].shape}")
            if self.keypoints[t].shape != (n, N_KEYPOINTS[t], 2):
                raise ValueError(f"keypoints for {t.name} have shape {self.keypoints[t].shape}")

    def edge_set(self) -> set:
        """Edges as ``(src id, dst id, relation)`` triples, independent of node order."""
        out = set()
        for (s, t), (src, dst, rel) in self.edges.items():
            si, ti = self.ids(s), self.ids(t)
            out.update((si[a], ti[b], Relation(int(r))) for a, b, r in zip(src, dst, rel))
        return out

    def __eq__(self, other):
        if not isinstance(other, OsmGraph) or self.d_text != other.d_text:
            return False
        if self.objects != other.objects:
            return False
        same = lambda a, b: a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()
        if not all(same(a, b) for a, b in zip(self.sigma + self.keypoints, other.sigma + other.keypoints)):
            return False
        return all(all(same(x, y) for x, y in zip(self.edges[f], other.edges[f])) for f in FAMILIES)

    __hash__ = None


def keypoint_rng(seed: int, object_id: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(object_id.encode("utf-8"))])


def _point_edges(points):
    """Delaunay over distinct coordinates; exact duplicates attach to their first occurrence."""
    if len(points) < 2:
        return []
    xy = np.array([[o.geom.x, o.geom.y] for o in points])
    uniq, first, inverse = np.unique(xy, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    rep = first  # uniq[k] first appears at node rep[k]
    pairs = [(int(rep[a]), int(rep[b])) for a, b in delaunay_edges(uniq)]
    pairs += [(int(rep[inverse[i]]), i) for i in range(len(points)) if rep[inverse[i]] != i]
    return pairs


def build_graph(objects, seed: int = 0, d_text: int | None = None) -> OsmGraph:
    """Nodes sorted by object id within each type, so the result does not depend on input order.

    Every object needs ``sigma`` set. Point pairs are linked by Delaunay
    edges; every other pair with a non-disjoint relation gets both directed
    edges (relation and its converse).
    """
    objects = list(objects)
    groups = [sorted((o for o in objects if o.kind == t), key=lambda o: o.id) for t in TYPES]
    for g in groups:
        ids = [o.id for o in g]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate object ids")
    if any(o.sigma is None for o in objects):
        raise ValueError("every object needs its sigma feature before graph construction")
    if d_text is None:
        d_text = int(objects[0].sigma.shape[0]) if objects else 0

    sigma = tuple(np.array([o.sigma for o in g], dtype=np.float64).reshape(len(g), d_text) for g in groups)
    keypoints = tuple(
        np.array([sample_keypoints(o.geom, keypoint_rng(seed, o.id)) for o in g],
                 dtype=np.float64).reshape(len(g), N_KEYPOINTS[t], 2)
        for t, g in zip(TYPES, groups)
    )

    lists = {f: [] for f in FAMILIES}
    P = NodeType.POINT
    for a, b in _point_edges(groups[P]):
        lists[(P, P)].append((a, b, Relation.DELAUNAY))
        lists[(P, P)].append((b, a, Relation.DELAUNAY))

    flat = [(t, i, o) for t, g in zip(TYPES, groups) for i, o in enumerate(g)]
    shp = [to_shapely(o.geom) for _, _, o in flat]
    env = np.array([shapely.bounds(s) for s in shp]).reshape(-1, 4)
    for u in range(len(flat)):
        tu, iu, _ = flat[u]
        cand = [v for v in range(u + 1, len(flat))
                if not (tu == P and flat[v][0] == P)
                and env[v, 0] <= env[u, 2] and env[u, 0] <= env[v, 2]
                and env[v, 1] <= env[u, 3] and env[u, 1] <= env[v, 3]]
        if not cand:
            continue
        mats = shapely.relate(shp[u], [shp[v] for v in cand])
        for v, m in zip(cand, np.atleast_1d(mats)):
            tv, iv, _ = flat[v]
            rel = relation_from_matrix(tu, tv, m)
            if rel is None:
                continue
            lists[(tu, tv)].append((iu, iv, rel))
            lists[(tv, tu)].append((iv, iu, CONVERSE[rel]))

    edges = {}
    for fam, items in lists.items():
        if not items:
            edges[fam] = _empty_edges()
            continue
        items.sort()
        arr = np.array([(a, b, int(r)) for a, b, r in items], dtype=np.int64)
        edges[fam] = (arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].astype(np.int8))
    g = OsmGraph(tuple(tuple(x) for x in groups), sigma, keypoints, edges, d_text)
    g.validate()
    return g


@dataclass(frozen=True, eq=False)
class NodeMaskPlan:
    masked: tuple  # three sorted int64 arrays
    visible: tuple

    @property
    def num_masked(self) -> int:
        return sum(len(m) for m in self.masked)

    @property
    def ratio(self) -> float:
        total = self.num_masked + sum(len(v) for v in self.visible)
        return self.num_masked / total if total else 0.0

    def flags(self, t) -> np.ndarray:
        """Boolean mask of length ``count(t)``; True marks a masked node."""
        n = len(self.masked[t]) + len(self.visible[t])
        out = np.zeros(n, dtype=bool)
        out[self.masked[t]] = True
        return out

    def __eq__(self, other):
        return (isinstance(other, NodeMaskPlan)
                and all(np.array_equal(a, b) for a, b in zip(self.masked, other.masked))
                and all(np.array_equal(a, b) for a, b in zip(self.visible, other.visible)))

    __hash__ = None


def mask_nodes(g: OsmGraph, ratio: float, rng: np.random.Generator) -> NodeMaskPlan:
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"mask ratio must be in [0, 1), got {ratio}")
    masked, visible = [], []
    for t in TYPES:
        n = g.count(t)
        k = int(np.floor(ratio * n))
        pick = np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64) if k else np.zeros(0, np.int64)
        keep = np.setdiff1d(np.arange(n, dtype=np.int64), pick)
        masked.append(pick)
        visible.append(keep)
    return NodeMaskPlan(tuple(masked), tuple(visible))


def no_mask(g: OsmGraph) -> NodeMaskPlan:
    return NodeMaskPlan(tuple(np.zeros(0, np.int64) for _ in TYPES),
                        tuple(np.arange(g.count(t), dtype=np.int64) for t in TYPES))


def empty_graph(d_text: int = 0) -> OsmGraph:
    return OsmGraph(((), (), ()),
                    tuple(np.zeros((0, d_text)) for _ in TYPES),
                    tuple(np.zeros((0, N_KEYPOINTS[t], 2)) for t in TYPES), {}, d_text)
