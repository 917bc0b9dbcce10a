"""One optimisation step over a batch of paired samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamSet, Tensor, gather_rows
from ..graph import mask_nodes
from ..model import ModelConfig, batch_graphs, forward, mask_patches, patchify
from .objectives import (
    LossReport, LossWeights, cst_adapter, loss_cont, loss_cst, loss_rec, retrieval_top1, total_loss,
)
from .optim import adamw_step


@dataclass(frozen=True)
class OptimConfig:
    beta1: float = 0.9
    beta2: float = 0.95
    weight_decay: float = 0.05
    eps: float = 1e-8
    clip_norm: float | None = None


def draw_plans(cfg: ModelConfig, graphs, rng: np.random.Generator):
    """Image plans first, then node plans, one per sample in order."""
    image_plans = [mask_patches(cfg.num_patches, cfg.mask_ratio_image, rng) for _ in graphs]
    node_plans = [mask_nodes(g, cfg.mask_ratio_node, rng) for g in graphs]
    return image_plans, node_plans


def compute_losses(ps: ParamSet, cfg: ModelConfig, weights: LossWeights, images, graphs,
                   image_plans, node_plans) -> LossReport:
    images = np.asarray(images, dtype=np.float64)
    batch = batch_graphs(graphs, node_plans, cfg.d_text)
    out = forward(ps, cfg, images, batch, image_plans, decode=True, fused=weights.gamma > 0)

    msk = np.stack([p.masked for p in image_plans])
    target = patchify(images, cfg.patch_size)[np.arange(len(graphs))[:, None], msk]
    l_rec = loss_rec(out.rec, target, cfg.norm_pix_target)
    l_cont = loss_cont(out.z_g, out.z_i, weights.tau)
    if weights.gamma > 0:
        idx = np.flatnonzero(np.concatenate(batch.masked))
        pred = cst_adapter(ps, gather_rows(out.eps_or, idx))
        sig = np.concatenate(batch.sigma, axis=0)[idx]
        l_cst, skipped = loss_cst(pred, sig, np.concatenate(batch.seg)[idx])
    else:
        l_cst, skipped = Tensor(0.0), True
    total = total_loss(l_rec, l_cont, l_cst, weights)
    return LossReport(float(l_rec.data), float(l_cont.data), float(l_cst.data), float(total.data),
                      retrieval_top1(out.z_g, out.z_i), skipped, total)


def train_step(ps: ParamSet, cfg: ModelConfig, weights: LossWeights, images, graphs,
               rng: np.random.Generator, lr: float, optim: OptimConfig = OptimConfig()) -> LossReport:
    """Draw mask plans from ``rng``, run forward and backward, then apply one AdamW update.

    A zero learning rate evaluates the losses and leaves parameters and
    optimizer state untouched.
    """
    if len(graphs) == 0:
        raise ValueError("empty batch")
    image_plans, node_plans = draw_plans(cfg, graphs, rng)
    ps.zero_grad()
    report = compute_losses(ps, cfg, weights, images, graphs, image_plans, node_plans)
    if lr > 0:
        report.total_tensor.backward()
        adamw_step(ps, lr, optim.beta1, optim.beta2, optim.weight_decay, optim.eps, optim.clip_norm)
    ps.zero_grad()
    report.total_tensor = None
    return report
