"""Fixed 2D sine-cosine position embeddings.

The first half of the vector encodes x, the second half y. Each half is a
run of ``(sin(c w_k), cos(c w_k))`` pairs with ``w_k = base^(-2k / (D/2))``
for ``k = 0 .. D/4 - 1``.
"""
from __future__ import annotations

import numpy as np


def frequencies(d: int, base: float = 10000.0) -> np.ndarray:
    if d % 4:
        raise ValueError(f"embedding dimension must be a multiple of 4, got {d}")
    half = d // 2
    return base ** (-2.0 * np.arange(d // 4) / half)


def _axis(c: np.ndarray, w: np.ndarray) -> np.ndarray:
    ang = c[..., None] * w
    out = np.empty(c.shape + (2 * len(w),))
    out[..., 0::2] = np.sin(ang)
    out[..., 1::2] = np.cos(ang)
    return out


def sincos_2d(xy, d: int, base: float = 10000.0) -> np.ndarray:
    """Embed ``(..., 2)`` coordinates into ``(..., d)``."""
    xy = np.asarray(xy, dtype=np.float64)
    w = frequencies(d, base)
    return np.concatenate([_axis(xy[..., 0], w), _axis(xy[..., 1], w)], axis=-1)


def position_embed(keypoints, d: int, base: float = 10000.0, scale: float = 1.0) -> np.ndarray:
    """Mean of the per-key-point embeddings; ``keypoints`` is ``(k, 2)`` or ``(n, k, 2)``."""
    kp = np.asarray(keypoints, dtype=np.float64)
    return sincos_2d(kp * scale, d, base).mean(axis=-2)


def patch_centers(grid: int) -> np.ndarray:
    """Row-major patch-center coordinates ``(x, y)`` in the unit frame, shape ``(grid*grid, 2)``."""
    c = (np.arange(grid) + 0.5) / grid
    yy, xx = np.meshgrid(c, c, indexing="ij")
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def grid_embedding(grid: int, d: int, base: float = 10000.0) -> np.ndarray:
    """Token embedding for the image encoder: the same embedder on integer grid coordinates."""
    idx = np.arange(grid, dtype=np.float64)
    yy, xx = np.meshgrid(idx, idx, indexing="ij")
    return sincos_2d(np.stack([xx.ravel(), yy.ravel()], axis=1), d, base)
