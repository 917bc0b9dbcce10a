"""Synthetic paired scenes: rendered shapes plus matching vector objects.

Each scene belongs to one of ``classes`` classes; the class sets the mix
of object kinds, and each kind has a fixed color and tag. Geometry uses the
image frame (x right, y down, unit square) and pixel ``(r, c)`` covers the
cell ``[c, c+1] x [r, r+1] / size``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np
import shapely

from ..geometry import Point, Polygon, Polyline, to_shapely
from ..osm import GeoObject, HashedNgramProvider, compute_tag_stats, embed_object
from .shards import PairedSample


@dataclass(frozen=True)
class Kind:
    name: str
    shape: str  # rect | disc | strip | dot
    color: tuple
    tag: tuple


KINDS = (
    Kind("building", "rect", (0.80, 0.25, 0.20), ("building", "yes")),
    Kind("park", "disc", (0.25, 0.70, 0.25), ("leisure", "park")),
    Kind("water", "rect", (0.20, 0.40, 0.85), ("natural", "water")),
    Kind("road", "strip", (0.45, 0.45, 0.45), ("highway", "residential")),
    Kind("river", "strip", (0.35, 0.75, 0.95), ("waterway", "river")),
    Kind("rail", "strip", (0.15, 0.10, 0.10), ("railway", "rail")),
    Kind("tree", "dot", (0.05, 0.40, 0.10), ("natural", "tree")),
    Kind("shop", "dot", (0.95, 0.80, 0.10), ("shop", "convenience")),
)

CLASS_NAMES = ("residential", "green", "water", "industrial")
_CLASS_WEIGHTS = np.array([
    [4, 0, 0, 3, 0, 0, 1, 2],
    [0, 4, 0, 1, 1, 0, 4, 0],
    [0, 1, 4, 0, 3, 0, 1, 0],
    [2, 0, 0, 2, 0, 4, 0, 1],
], dtype=np.float64)
_DRAW_ORDER = {"rect": 0, "disc": 0, "strip": 1, "dot": 2}

STRIP_WIDTH_PX = 1.6
DOT_RADIUS_PX = 2.2
DISC_SIDES = 32


@dataclass(frozen=True)
class SyntheticSceneSpec:
    classes: int = 4
    shapes_min: int = 4
    shapes_max: int = 8
    noise: float = 0.02
    image_size: int = 32
    d_text: int = 64
    zone_tag_prob: float = 0.5

    def __post_init__(self):
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if not 1 <= self.shapes_min <= self.shapes_max:
            raise ValueError("need 1 <= shapes_min <= shapes_max")
        if self.image_size < 16:
            raise ValueError("image_size must be at least 16")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")

    def class_weights(self, c: int) -> np.ndarray:
        if c < len(_CLASS_WEIGHTS):
            w = _CLASS_WEIGHTS[c]
        else:
            w = np.random.default_rng([7919, c]).dirichlet(np.full(len(KINDS), 0.5))
        return w / w.sum()

    def class_name(self, c: int) -> str:
        return CLASS_NAMES[c] if c < len(CLASS_NAMES) else f"class{c}"

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSceneSpec":
        unknown = set(d) - set(asdict(cls()))
        if unknown:
            raise ValueError(f"unknown synthetic spec keys: {sorted(unknown)}")
        return cls(**d)


def pixel_centers(size: int) -> np.ndarray:
    c = (np.arange(size) + 0.5) / size
    yy, xx = np.meshgrid(c, c, indexing="ij")
    return np.stack([xx, yy], axis=-1)


def _seg_dist(px, py, a, b):
    d = b - a
    t = np.clip(((px - a[0]) * d[0] + (py - a[1]) * d[1]) / max(float(d @ d), 1e-18), 0.0, 1.0)
    return np.hypot(px - (a[0] + t * d[0]), py - (a[1] + t * d[1]))


def _make_shape(kind: Kind, rng, size: int):
    """Geometry plus its pixel footprint mask (before occlusion)."""
    px = pixel_centers(size)
    x, y = px[..., 0], px[..., 1]
    if kind.shape == "rect":
        w, h = rng.integers(5, 13, size=2)
        c0 = rng.integers(0, size - w + 1)
        r0 = rng.integers(0, size - h + 1)
        x0, y0, x1, y1 = c0 / size, r0 / size, (c0 + w) / size, (r0 + h) / size
        geom = Polygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        mask = (x > x0) & (x < x1) & (y > y0) & (y < y1)
    elif kind.shape == "disc":
        r = rng.uniform(3.0, 6.0) / size
        cx, cy = rng.uniform(r, 1.0 - r, size=2)
        th = 2.0 * np.pi * np.arange(DISC_SIDES) / DISC_SIDES
        geom = Polygon(np.stack([cx + r * np.cos(th), cy + r * np.sin(th)], axis=1))
        mask = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
    elif kind.shape == "strip":
        n = int(rng.integers(2, 4))
        lo, hi = 0.03, 0.97
        if rng.random() < 0.5:
            xs = np.sort(rng.uniform(lo, hi, size=n))
            xs[0], xs[-1] = lo, hi
            ys = rng.uniform(lo, hi, size=n)
        else:
            ys = np.sort(rng.uniform(lo, hi, size=n))
            ys[0], ys[-1] = lo, hi
            xs = rng.uniform(lo, hi, size=n)
        v = np.stack([xs, ys], axis=1)
        geom = Polyline(v)
        half = 0.5 * STRIP_WIDTH_PX / size
        dist = np.min([_seg_dist(x, y, v[i], v[i + 1]) for i in range(n - 1)], axis=0)
        mask = dist <= half
    else:
        r = DOT_RADIUS_PX / size
        cx, cy = rng.uniform(0.05, 0.95, size=2)
        geom = Point(cx, cy)
        mask = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
    return geom, mask


def rasterize(geom, size: int) -> np.ndarray:
    """Pixel-center rasterization of a geometry, independent of the renderer.

    Polylines are buffered by half the strip width and points by the dot radius.
    """
    shp = to_shapely(geom)
    if isinstance(geom, Polyline):
        shp = shp.buffer(0.5 * STRIP_WIDTH_PX / size, quad_segs=64)
    elif isinstance(geom, Point):
        shp = shp.buffer(DOT_RADIUS_PX / size, quad_segs=64)
    pc = pixel_centers(size).reshape(-1, 2)
    inside = shapely.contains_xy(shp, pc[:, 0], pc[:, 1])
    return inside.reshape(size, size)


def generate_scene(spec: SyntheticSceneSpec, rng: np.random.Generator, sid: str):
    """Returns ``(sample without sigma, class index, footprint masks)``."""
    size = spec.image_size
    cls = int(rng.integers(spec.classes))
    n = int(rng.integers(spec.shapes_min, spec.shapes_max + 1))
    kinds = rng.choice(len(KINDS), size=n, p=spec.class_weights(cls))
    items = []
    for j, k in enumerate(kinds):
        kind = KINDS[k]
        geom, mask = _make_shape(kind, rng, size)
        tags = [kind.tag]
        if rng.random() < spec.zone_tag_prob:
            tags.append(("zone", spec.class_name(cls)))
        prefix = "node" if kind.shape == "dot" else "way"
        items.append((_DRAW_ORDER[kind.shape], j, kind, GeoObject(f"{prefix}/{j + 1}", geom, tuple(tags)), mask))
    items.sort(key=lambda it: (it[0], it[1]))

    shade = rng.uniform(0.85, 0.95)
    img = np.empty((size, size, 3))
    img[:] = np.array([shade, shade * 0.98, shade * 0.92])
    for _, _, kind, _, mask in items:
        img[mask] = kind.color
    if spec.noise:
        img = img + rng.normal(0.0, spec.noise, size=img.shape)
    img = np.clip(img, 0.0, 1.0)
    objects = tuple(it[3] for it in items)
    masks = {it[3].id: it[4] for it in items}
    sample = PairedSample(sid, img, objects, (0.0, 0.0, 1.0, 1.0), "",
                          {"class": cls, "class_name": spec.class_name(cls)})
    return sample, cls, masks


def synth_gen(spec: SyntheticSceneSpec, count: int, seed: int, provider=None, return_masks=False):
    """Generate ``count`` scenes; returns ``(samples, ledger)`` (plus masks on request).

    Tag statistics are computed over the generated corpus before embedding,
    and the ledger records the class of each scene and the tag-key counts.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    provider = HashedNgramProvider(spec.d_text) if provider is None else provider
    rng = np.random.default_rng([int(seed), 0x5EED])
    raw, classes, all_masks = [], [], []
    for i in range(count):
        s, c, m = generate_scene(spec, rng, f"synth-{seed}-{i:06d}")
        raw.append(s)
        classes.append(c)
        all_masks.append(m)
    stats = compute_tag_stats(o for s in raw for o in s.objects)
    samples = [s.with_objects(o.with_sigma(embed_object(o, provider, stats)) for o in s.objects)
               for s in raw]
    kind_counts = Counter(o.tags[0][1] for s in raw for o in s.objects)
    ledger = {
        "seed": int(seed),
        "count": int(count),
        "spec": asdict(spec),
        "classes": classes,
        "tag_counts": dict(sorted(stats.counts.items())),
        "kind_counts": dict(sorted(kind_counts.items())),
        "scenes": [{"id": s.id, "class": c} for s, c in zip(samples, classes)],
    }
    if return_masks:
        return samples, ledger, all_masks
    return samples, ledger
