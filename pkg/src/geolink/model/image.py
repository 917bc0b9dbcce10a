"""Masked image encoder, mask decoder and mean pooling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamSet, Tensor, gather_rows, scatter_add_rows
from .config import ModelConfig
from .layers import block, init_block, init_linear, init_ln, linear, ln
from .posenc import grid_embedding


def patchify(image, patch: int) -> np.ndarray:
    """``(H, W, C)`` or ``(B, H, W, C)`` -> row-major patches of ``patch*patch*C`` values (row, col, channel)."""
    img = np.asarray(image, dtype=np.float64)
    *lead, h, w, c = img.shape
    if h % patch or w % patch:
        raise ValueError(f"image {h}x{w} is not divisible by patch size {patch}")
    gh, gw = h // patch, w // patch
    x = img.reshape(*lead, gh, patch, gw, patch, c)
    k = len(lead)
    x = np.moveaxis(x, k + 2, k + 1)  # (..., gh, gw, patch, patch, c)
    return x.reshape(*lead, gh * gw, patch * patch * c)


def unpatchify(patches, height: int, width: int, patch: int, channels: int = 3) -> np.ndarray:
    p = np.asarray(patches, dtype=np.float64)
    *lead, n, _ = p.shape
    gh, gw = height // patch, width // patch
    if n != gh * gw:
        raise ValueError(f"{n} patches do not tile a {height}x{width} image with patch {patch}")
    k = len(lead)
    x = p.reshape(*lead, gh, gw, patch, patch, channels)
    x = np.moveaxis(x, k + 1, k + 2)
    return x.reshape(*lead, height, width, channels)


@dataclass(frozen=True, eq=False)
class ImageMaskPlan:
    visible: np.ndarray  # sorted int64
    masked: np.ndarray

    @property
    def num_patches(self) -> int:
        return len(self.visible) + len(self.masked)

    def __eq__(self, other):
        return (isinstance(other, ImageMaskPlan) and np.array_equal(self.visible, other.visible)
                and np.array_equal(self.masked, other.masked))

    __hash__ = None


def mask_patches(n_patches: int, ratio: float, rng: np.random.Generator) -> ImageMaskPlan:
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"mask ratio must be in [0, 1), got {ratio}")
    k = int(np.floor(ratio * n_patches))
    perm = rng.permutation(n_patches)
    return ImageMaskPlan(np.sort(perm[k:]).astype(np.int64), np.sort(perm[:k]).astype(np.int64))


def full_plan(n_patches: int) -> ImageMaskPlan:
    return ImageMaskPlan(np.arange(n_patches, dtype=np.int64), np.zeros(0, np.int64))


def init_image(ps: ParamSet, cfg: ModelConfig, rng):
    init_linear(ps, "img.embed", cfg.patch_dim, cfg.d_patch, rng)
    for i in range(cfg.enc_depth):
        init_block(ps, f"img.blk{i}", cfg.d_patch, cfg.mlp_ratio, rng)
    init_linear(ps, "dec.embed", cfg.d_patch, cfg.dec_dim, rng)
    ps.add("dec.mask_token", rng.normal(0.0, cfg.init_std, size=cfg.dec_dim))
    for i in range(cfg.dec_depth):
        init_block(ps, f"dec.blk{i}", cfg.dec_dim, cfg.mlp_ratio, rng)
    init_ln(ps, "dec.norm", cfg.dec_dim)
    init_linear(ps, "dec.head", cfg.dec_dim, cfg.patch_dim, rng)


def _stack(plans, attr) -> np.ndarray:
    rows = [getattr(p, attr) for p in plans]
    if len({len(r) for r in rows}) > 1:
        raise ValueError("all samples in a batch must use the same number of visible patches")
    return np.stack(rows) if rows else np.zeros((0, 0), np.int64)


def encode_image(ps: ParamSet, cfg: ModelConfig, patches, plans) -> Tensor:
    """Visible-token transformer: ``patches`` is ``(B, L_P, patch_dim)``; returns ``(B, L_v, D_P)``.

    Only visible tokens are gathered (before projection), so cost scales with
    the number of visible patches.
    """
    patches = np.asarray(patches, dtype=np.float64)
    vis = _stack(plans, "visible")
    b = np.arange(len(plans))[:, None]
    x = linear(ps, "img.embed", Tensor(patches[b, vis]))
    x = x + grid_embedding(cfg.grid, cfg.d_patch)[vis]
    for i in range(cfg.enc_depth):
        x = block(ps, f"img.blk{i}", x, cfg.enc_heads)
    return x


def decode_masked(ps: ParamSet, cfg: ModelConfig, enc: Tensor, plans) -> Tensor:
    """Reconstruct masked patches: ``(B, L_m, patch_dim)``."""
    vis, msk = _stack(plans, "visible"), _stack(plans, "masked")
    bsz, n = len(plans), cfg.num_patches
    y = linear(ps, "dec.embed", enc)
    d = y.shape[-1]
    offs = (np.arange(bsz) * n)[:, None]
    rows = scatter_add_rows(y.reshape(-1, d), (vis + offs).reshape(-1), bsz * n)
    is_masked = np.zeros((bsz * n, 1))
    is_masked[(msk + offs).reshape(-1)] = 1.0
    full = rows + ps["dec.mask_token"] * is_masked
    x = full.reshape(bsz, n, d) + grid_embedding(cfg.grid, cfg.dec_dim)
    for i in range(cfg.dec_depth):
        x = block(ps, f"dec.blk{i}", x, cfg.dec_heads)
    out = linear(ps, "dec.head", ln(ps, "dec.norm", x))
    picked = gather_rows(out.reshape(bsz * n, cfg.patch_dim), (msk + offs).reshape(-1))
    return picked.reshape(bsz, msk.shape[1], cfg.patch_dim)


def pool_image(enc: Tensor) -> Tensor:
    if enc.shape[-2] == 0:
        raise ValueError("cannot pool an empty token set")
    return enc.mean(axis=-2)
