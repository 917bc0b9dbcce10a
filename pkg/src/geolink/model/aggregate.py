"""Region readout: one Set2Set per node type, then attention over the three types."""
from __future__ import annotations

import numpy as np

from ..autodiff import (
    ParamSet, Tensor, concat, gather_rows, scatter_add_rows, segment_softmax, slice_, softmax,
)
from ..graph import TYPES
from .config import ModelConfig
from .layers import init_linear, init_lstm, linear, lstm_cell
from .osm_encoder import TYPE_TAGS


def init_aggregate(ps: ParamSet, cfg: ModelConfig, rng):
    d = cfg.d_node
    for tag in TYPE_TAGS:
        init_lstm(ps, f"agg.{tag}.lstm", 2 * d, d, rng)
        init_linear(ps, f"agg.{tag}.out", 2 * d, d, rng)
        ps.add(f"agg.{tag}.empty", rng.normal(0.0, cfg.init_std, size=d))
    init_linear(ps, "agg.score", d, 1, rng)


def set2set(ps: ParamSet, name: str, x: Tensor, seg, n_seg: int, steps: int) -> Tensor:
    """Set2Set readout of node rows ``x`` grouped by ``seg``; returns ``(n_seg, 2d)``."""
    d = x.shape[1]
    q_star = Tensor(np.zeros((n_seg, 2 * d)))
    h = Tensor(np.zeros((n_seg, d)))
    c = Tensor(np.zeros((n_seg, d)))
    for _ in range(steps):
        h, c = lstm_cell(ps, name, q_star, h, c)
        if x.shape[0]:
            e = (x * gather_rows(h, seg)).sum(axis=1, keepdims=True)
            a = segment_softmax(e, seg, n_seg)
            r = scatter_add_rows(a * x, seg, n_seg)
        else:
            r = Tensor(np.zeros((n_seg, d)))
        q_star = concat([h, r], axis=1)
    return q_star


def aggregate_region(ps: ParamSet, cfg: ModelConfig, node_enc, batch):
    """Returns ``(eps_G, type_weights, all_empty)`` with shapes ``(B, D_V)``, ``(B, 3)``, ``(B,)``."""
    n_seg = batch.n_graphs
    per_type = []
    empty = np.zeros((n_seg, 3), dtype=bool)
    for t, tag in zip(TYPES, TYPE_TAGS):
        counts = np.bincount(batch.seg[t], minlength=n_seg)
        empty[:, t] = counts == 0
        q = set2set(ps, f"agg.{tag}.lstm", node_enc[t], batch.seg[t], n_seg, cfg.set2set_steps)
        out = linear(ps, f"agg.{tag}.out", q)
        e = empty[:, t:t + 1].astype(np.float64)
        per_type.append(out * (1.0 - e) + ps[f"agg.{tag}.empty"] * e)
    scores = concat([linear(ps, "agg.score", g) for g in per_type], axis=1)
    w = softmax(scores, axis=1)
    eps_g = per_type[0] * slice_(w, 0, 1)
    for t in (1, 2):
        eps_g = eps_g + per_type[t] * slice_(w, t, t + 1)
    return eps_g, w, empty.all(axis=1)
