"""Two-way object-patch fusion encoder.

Stage 1 is self-attention over object tokens, stage 2 lets patch tokens
query objects (giving the hybrid patch encodings) and stage 3 lets object
tokens query the updated patches (giving the hybrid object encodings).
Position embeddings are added to keys and values only. Every attention
sublayer is followed by residual + layer norm and a feed-forward sublayer.

Samples are padded to the largest object count in the batch; padded keys
are masked out and padded query rows are discarded.
"""
from __future__ import annotations

import numpy as np

from ..autodiff import ParamSet, Tensor, gather_rows, scatter_add_rows
from .config import ModelConfig
from .layers import init_linear, init_ln, init_mha, init_mlp, linear, ln, mha, mlp


def init_fusion(ps: ParamSet, cfg: ModelConfig, rng):
    d = cfg.d_fusion
    init_linear(ps, "fuse.in_patch", cfg.d_patch, d, rng)
    init_linear(ps, "fuse.in_obj", cfg.d_node, d, rng)
    init_linear(ps, "fuse.pe", cfg.d_pe, d, rng, bias=False)
    for stage in ("s1", "s2", "s3"):
        init_mha(ps, f"fuse.{stage}.attn", d, rng)
        init_ln(ps, f"fuse.{stage}.ln1", d)
        init_mlp(ps, f"fuse.{stage}.mlp", d, d * cfg.mlp_ratio, rng)
        init_ln(ps, f"fuse.{stage}.ln2", d)


def _sublayers(ps, stage, x, attn_out):
    x = ln(ps, f"fuse.{stage}.ln1", x + attn_out)
    return ln(ps, f"fuse.{stage}.ln2", x + mlp(ps, f"fuse.{stage}.mlp", x))


def pad_objects(rows: Tensor, seg, pos, n_graphs: int):
    """Scatter ``(N, D)`` object rows into a ``(B, N_max, D)`` padded tensor plus key mask."""
    n_max = max(int(pos.max()) + 1 if len(pos) else 0, 1)
    flat = seg * n_max + pos
    d = rows.shape[1]
    padded = scatter_add_rows(rows, flat, n_graphs * n_max).reshape(n_graphs, n_max, d)
    mask = np.zeros(n_graphs * n_max, dtype=bool)
    mask[flat] = True
    return padded, mask.reshape(n_graphs, n_max), flat


def fuse(ps: ParamSet, cfg: ModelConfig, patches: Tensor, patch_pe, objects: Tensor, object_pe,
         seg, pos, n_graphs: int):
    """Fuse ``(B, L_v, D_P)`` patch tokens with ``(N, D_V)`` object rows (batch order).

    Returns ``(eps_RO (B, L_v, D_F), eps_OR (N, D_F))``. A sample without
    objects skips the cross-attention in stage 2, so its patch encodings are
    a pure self-projection.
    """
    heads = cfg.fusion_heads
    p = linear(ps, "fuse.in_patch", patches)
    v_rows = linear(ps, "fuse.in_obj", objects)
    if cfg.fusion_pe:
        pe_p = linear(ps, "fuse.pe", Tensor(patch_pe))
        pe_v_rows = linear(ps, "fuse.pe", Tensor(object_pe))
    else:
        pe_p = pe_v_rows = None
    seg = np.asarray(seg, dtype=np.int64)
    pos = np.asarray(pos, dtype=np.int64)
    v, key_mask, flat = pad_objects(v_rows, seg, pos, n_graphs)
    if pe_v_rows is not None:
        pe_v, _, _ = pad_objects(pe_v_rows, seg, pos, n_graphs)
        kv_v = lambda x: x + pe_v
        kv_p = lambda x: x + pe_p
    else:
        kv_v = kv_p = lambda x: x
    has_obj = key_mask.any(axis=1).astype(np.float64)[:, None, None]

    kv = kv_v(v)
    v1 = _sublayers(ps, "s1", v, mha(ps, "fuse.s1.attn", v, kv, kv, heads, key_mask))
    kv = kv_v(v1)
    cross = mha(ps, "fuse.s2.attn", p, kv, kv, heads, key_mask) * has_obj
    eps_ro = _sublayers(ps, "s2", p, cross)
    kp = kv_p(eps_ro)
    v3 = _sublayers(ps, "s3", v1, mha(ps, "fuse.s3.attn", v1, kp, kp, heads))
    eps_or = gather_rows(v3.reshape(-1, cfg.d_fusion), flat)
    return eps_ro, eps_or
