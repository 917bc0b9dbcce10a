"""Parameter initialisation and the full forward pass for a batch of paired samples."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ParamSet, Tensor, concat
from .aggregate import aggregate_region, init_aggregate
from .config import ModelConfig
from .fusion import fuse, init_fusion
from .image import decode_masked, encode_image, init_image, patchify, pool_image
from .layers import init_linear, linear
from .osm_encoder import GraphBatch, encode_osm, init_osm
from .posenc import patch_centers, position_embed, sincos_2d


def init_params(cfg: ModelConfig, seed: int = 0) -> ParamSet:
    cfg.validate()
    rng = np.random.default_rng(seed)
    ps = ParamSet()
    init_image(ps, cfg, rng)
    init_osm(ps, cfg, rng)
    init_aggregate(ps, cfg, rng)
    init_linear(ps, "proj.G", cfg.d_node, cfg.d_proj, rng)
    init_linear(ps, "proj.I", cfg.d_patch, cfg.d_proj, rng)
    init_fusion(ps, cfg, rng)
    init_linear(ps, "cst.adapter", cfg.d_fusion, cfg.d_text, rng)
    return ps


def project_pair(ps: ParamSet, eps_g, eps_i):
    return linear(ps, "proj.G", eps_g), linear(ps, "proj.I", eps_i)


def object_pe(cfg: ModelConfig, batch: GraphBatch) -> np.ndarray:
    """Object position embeddings in type-major batch order, ``(N, D_pe)``."""
    parts = [position_embed(kp, cfg.d_pe, cfg.pe_base, cfg.pe_coord_scale) for kp in batch.keypoints]
    return np.concatenate([p.reshape(-1, cfg.d_pe) for p in parts], axis=0)


def patch_pe(cfg: ModelConfig, plans) -> np.ndarray:
    centers = patch_centers(cfg.grid) * cfg.pe_coord_scale
    table = sincos_2d(centers, cfg.d_pe, cfg.pe_base)
    return np.stack([table[p.visible] for p in plans])


@dataclass
class EncodingBundle:
    """Batched encodings. Node-indexed fields use type-major batch order
    (all points of the batch, then polylines, then polygons)."""

    eps_pv: Tensor  # (B, L_v, D_P)
    eps_v: tuple  # per type (N_t, D_V)
    eps_g: Tensor  # (B, D_V)
    eps_i: Tensor  # (B, D_P)
    z_g: Tensor  # (B, D_proj)
    z_i: Tensor  # (B, D_proj)
    rec: Tensor | None = None  # (B, L_m, patch_dim)
    eps_ro: Tensor | None = None  # (B, L_v, D_F)
    eps_or: Tensor | None = None  # (N, D_F)
    type_weights: Tensor | None = None
    all_empty: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))


def forward(ps: ParamSet, cfg: ModelConfig, images, batch: GraphBatch, image_plans,
            decode: bool = True, fused: bool = True) -> EncodingBundle:
    patches = patchify(images, cfg.patch_size)
    eps_pv = encode_image(ps, cfg, patches, image_plans)
    node_enc = encode_osm(ps, cfg, batch)
    eps_g, w, all_empty = aggregate_region(ps, cfg, node_enc, batch)
    eps_i = pool_image(eps_pv)
    z_g, z_i = project_pair(ps, eps_g, eps_i)
    out = EncodingBundle(eps_pv, node_enc, eps_g, eps_i, z_g, z_i, type_weights=w, all_empty=all_empty)
    if decode and len(image_plans[0].masked):
        out.rec = decode_masked(ps, cfg, eps_pv, image_plans)
    if fused:
        objects = concat(list(node_enc), axis=0)
        seg = np.concatenate(batch.seg)
        pos = np.concatenate(batch.pos)
        out.eps_ro, out.eps_or = fuse(ps, cfg, eps_pv, patch_pe(cfg, image_plans), objects,
                                      object_pe(cfg, batch), seg, pos, batch.n_graphs)
    return out
