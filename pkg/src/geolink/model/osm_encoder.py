"""Heterogeneous attention message passing over typed object graphs.

Graphs in a batch are merged into one disjoint union: node rows of each type
are concatenated sample after sample and edge indices are offset to match.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    ParamSet, Tensor, concat, gather_rows, gelu, layer_norm, leaky_relu, scatter_add_rows,
    segment_softmax,
)
from ..geometry import N_RELATIONS
from ..graph import FAMILIES, TYPES, no_mask
from .config import ModelConfig
from .layers import init_linear, init_ln, linear

TYPE_TAGS = ("p", "l", "g")


@dataclass
class GraphBatch:
    n_graphs: int
    sigma: tuple  # per type (N_t, d_text)
    masked: tuple  # per type bool (N_t,)
    seg: tuple  # per type graph id (N_t,)
    pos: tuple  # per type position of the node within its sample's object sequence (N_t,)
    keypoints: tuple  # per type (N_t, k, 2)
    edges: dict  # family -> (src, dst, onehot)
    sizes: np.ndarray  # (n_graphs,) node count per sample

    @property
    def counts(self) -> tuple:
        return tuple(len(s) for s in self.seg)

    def flat_masked(self):
        """Sample ids and positions of masked nodes, in type-major batch order."""
        seg = np.concatenate([s[m] for s, m in zip(self.seg, self.masked)])
        pos = np.concatenate([p[m] for p, m in zip(self.pos, self.masked)])
        return seg.astype(np.int64), pos.astype(np.int64)


def batch_graphs(graphs, plans=None, d_text: int | None = None) -> GraphBatch:
    graphs = list(graphs)
    plans = [no_mask(g) for g in graphs] if plans is None else list(plans)
    if d_text is None:
        d_text = next((g.d_text for g in graphs if g.num_nodes), 0)
    sigma, masked, seg, pos, kps = [], [], [], [], []
    starts = {}
    prev = np.zeros(len(graphs), np.int64)
    for t in TYPES:
        starts[t] = np.cumsum([0] + [g.count(t) for g in graphs])
        sigma.append(np.concatenate([g.sigma[t].reshape(g.count(t), d_text) for g in graphs] + [np.zeros((0, d_text))], axis=0))
        masked.append(np.concatenate([p.flags(t) for p in plans] + [np.zeros(0, bool)]))
        seg.append(np.concatenate([np.full(g.count(t), i, np.int64) for i, g in enumerate(graphs)]
                                  + [np.zeros(0, np.int64)]))
        pos.append(np.concatenate([prev[i] + np.arange(g.count(t)) for i, g in enumerate(graphs)]
                                  + [np.zeros(0, np.int64)]).astype(np.int64))
        kp_shape = graphs[0].keypoints[t].shape[1:] if graphs else (1, 2)
        kps.append(np.concatenate([g.keypoints[t] for g in graphs] + [np.zeros((0,) + kp_shape)]))
        prev = prev + np.array([g.count(t) for g in graphs], dtype=np.int64)
    for g in graphs:
        if g.d_text != d_text and g.num_nodes:
            raise ValueError(f"graph feature dim {g.d_text} != {d_text}")
    edges = {}
    for s, t in FAMILIES:
        src, dst, rel = [], [], []
        for i, g in enumerate(graphs):
            a, b, r = g.edges[(s, t)]
            src.append(a + starts[s][i])
            dst.append(b + starts[t][i])
            rel.append(r)
        src = np.concatenate(src + [np.zeros(0, np.int64)]).astype(np.int64)
        dst = np.concatenate(dst + [np.zeros(0, np.int64)]).astype(np.int64)
        rel = np.concatenate(rel + [np.zeros(0, np.int8)]).astype(np.int64)
        onehot = np.zeros((len(rel), N_RELATIONS))
        onehot[np.arange(len(rel)), rel] = 1.0
        edges[(s, t)] = (src, dst, onehot)
    return GraphBatch(len(graphs), tuple(sigma), tuple(masked), tuple(seg), tuple(pos), tuple(kps),
                      edges, prev)


def init_osm(ps: ParamSet, cfg: ModelConfig, rng):
    for t, tag in zip(TYPES, TYPE_TAGS):
        ps.add(f"osm.mask_token.{tag}", rng.normal(0.0, cfg.init_std, size=cfg.d_text))
        init_linear(ps, f"osm.in.{tag}", cfg.d_text, cfg.d_node, rng)
    for r in range(cfg.gat_rounds):
        for s, t in FAMILIES:
            name = f"osm.r{r}.{TYPE_TAGS[s]}{TYPE_TAGS[t]}"
            init_linear(ps, f"{name}.msg", cfg.d_node + N_RELATIONS, cfg.d_node, rng, bias=False)
            init_linear(ps, f"{name}.att_src", cfg.d_node, 1, rng, bias=False)
            init_linear(ps, f"{name}.att_dst", cfg.d_node, 1, rng, bias=False)
        for tag in TYPE_TAGS:
            ps.add(f"osm.r{r}.{tag}.bias", np.zeros(cfg.d_node))
            init_ln(ps, f"osm.r{r}.{tag}.ln", cfg.d_node)


def input_features(ps: ParamSet, batch: GraphBatch, t) -> Tensor:
    """Initial node features: stored sigma for visible nodes, the type's mask token for masked ones.

    Masked rows are gathered from the token only, so their stored sigma never
    enters the computation.
    """
    tag = TYPE_TAGS[t]
    sig = batch.sigma[t]
    n = len(sig)
    table = concat([Tensor(sig), ps[f"osm.mask_token.{tag}"].reshape(1, -1)], axis=0)
    idx = np.where(batch.masked[t], n, np.arange(n))
    return linear(ps, f"osm.in.{tag}", gather_rows(table, idx))


def encode_osm(ps: ParamSet, cfg: ModelConfig, batch: GraphBatch) -> tuple:
    """Node encodings per type, each ``(N_t, D_V)``."""
    h = [input_features(ps, batch, t) for t in TYPES]
    for r in range(cfg.gat_rounds):
        new = []
        for t in TYPES:
            n_t = batch.counts[t]
            tag = TYPE_TAGS[t]
            if n_t == 0:
                new.append(h[t])
                continue
            total = h[t] + ps[f"osm.r{r}.{tag}.bias"]
            for s in TYPES:
                src, dst, onehot = batch.edges[(s, t)]
                if len(src) == 0:
                    continue
                name = f"osm.r{r}.{TYPE_TAGS[s]}{tag}"
                m = linear(ps, f"{name}.msg", concat([gather_rows(h[s], src), Tensor(onehot)], axis=1))
                logit = leaky_relu(gather_rows(linear(ps, f"{name}.att_dst", h[t]), dst)
                                   + linear(ps, f"{name}.att_src", m))
                alpha = segment_softmax(logit, dst, n_t)
                total = total + scatter_add_rows(alpha * m, dst, n_t)
            new.append(gelu(layer_norm(total, ps[f"osm.r{r}.{tag}.ln.g"], ps[f"osm.r{r}.{tag}.ln.b"])))
        h = new
    return tuple(h)
