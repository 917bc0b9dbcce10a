"""Paired augmentation: one crop/flip applied to image and vector objects, jitter on pixels only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import SampleTransform, apply_transform
from .shards import PairedSample

CROP_SCALE = (0.5, 1.0)
JITTER = (0.8, 1.2)
MAX_RETRIES = 4
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Jitter:
    brightness: float = 1.0
    contrast: float = 1.0
    saturation: float = 1.0


def draw_transform(rng: np.random.Generator, scale=CROP_SCALE) -> SampleTransform:
    """Square crop with side fraction ``U(scale)`` at a uniform position, flipped with probability 1/2."""
    s = float(rng.uniform(*scale))
    x0 = float(rng.uniform(0.0, 1.0 - s))
    y0 = float(rng.uniform(0.0, 1.0 - s))
    return SampleTransform(x0, y0, s, s, bool(rng.random() < 0.5))


def draw_jitter(rng: np.random.Generator, span=JITTER) -> Jitter:
    b, c, s = rng.uniform(*span, size=3)
    return Jitter(float(b), float(c), float(s))


def transform_image(img: np.ndarray, t: SampleTransform) -> np.ndarray:
    """Bilinear crop-resize to the original size, then mirror if ``t.flip``.

    Output pixel centers map through the inverse of :meth:`SampleTransform.map_xy`,
    so image content and transformed geometry stay aligned.
    """
    if t.is_identity:
        return img.copy()
    h, w = img.shape[:2]
    u = (np.arange(w) + 0.5) / w
    v = (np.arange(h) + 0.5) / h
    if t.flip:
        u = 1.0 - u
    xs = (t.x0 + u * t.width) * w - 0.5
    ys = (t.y0 + v * t.height) * h - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :, None]
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def jitter_image(img: np.ndarray, j: Jitter) -> np.ndarray:
    out = img * j.brightness
    mean = out.mean()
    out = (out - mean) * j.contrast + mean
    gray = (out @ _LUMA)[..., None]
    out = (out - gray) * j.saturation + gray
    return np.clip(out, 0.0, 1.0)


def apply_pair(sample: PairedSample, t: SampleTransform, jitter: Jitter | None = None) -> PairedSample:
    """Apply one transform to both modalities; objects that vanish are dropped."""
    objects = []
    for o in sample.objects:
        g = apply_transform(o.geom, t)
        if g is not None:
            objects.append(o.with_geom(g))
    img = transform_image(sample.image, t)
    if jitter is not None:
        img = jitter_image(img, jitter)
    return PairedSample(sample.id, img, tuple(objects), sample.window, sample.timestamp, sample.meta)


def augment_pair(sample: PairedSample, rng: np.random.Generator) -> PairedSample:
    """Random crop, flip and color jitter; if every object vanishes, redraw up to
    ``MAX_RETRIES`` times, then return the sample unchanged."""
    if not sample.objects:
        return sample
    for _ in range(1 + MAX_RETRIES):
        t = draw_transform(rng)
        j = draw_jitter(rng)
        out = apply_pair(sample, t, j)
        if out.objects:
            return out
    return sample
