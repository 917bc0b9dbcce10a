"""Pretraining losses and their weighted combination."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..autodiff import ParamSet, Tensor, as_tensor, l2_normalize, log_softmax, mse


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 0.01
    gamma: float = 0.01
    tau: float = 0.2

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"loss weight {name} must be a finite non-negative number")
        if not (isinstance(self.tau, (int, float)) and self.tau > 0):
            raise ValueError("temperature tau must be positive")


@dataclass
class LossReport:
    l_rec: float
    l_cont: float
    l_cst: float
    total: float
    retrieval_top1: float = float("nan")
    cst_skipped: bool = False
    total_tensor: Tensor | None = field(default=None, repr=False, compare=False)

    def record(self, step: int) -> dict:
        d = asdict(self)
        d.pop("total_tensor")
        return {"step": int(step), **d}


def loss_rec(pred, target, norm_pix: bool = False) -> Tensor:
    """Mean squared pixel error over masked patches.

    ``pred`` and ``target`` are ``(B, L_m, P)`` (or ``(L_m, P)``). All samples
    share ``L_m``, so the batch mean of per-sample means is the global mean.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape[-2] == 0:
        raise ValueError("reconstruction loss needs at least one masked patch")
    if norm_pix:
        mu = target.mean(axis=-1, keepdims=True)
        var = target.var(axis=-1, keepdims=True)
        target = (target - mu) / np.sqrt(var + 1e-6)
    return mse(pred, Tensor(target))


def similarity_logits(z_g, z_i, tau: float) -> Tensor:
    return (l2_normalize(z_g) @ l2_normalize(z_i).T) * (1.0 / tau)


def loss_cont(z_g, z_i, tau: float = 0.2) -> Tensor:
    """Symmetric InfoNCE over in-batch pairs with cosine similarity; diagonal pairs are positive."""
    s = similarity_logits(z_g, z_i, tau)
    n = s.shape[0]
    diag = (np.arange(n), np.arange(n))
    g2i = log_softmax(s, axis=1)[diag]
    i2g = log_softmax(s, axis=0)[diag]
    return -(g2i.sum() + i2g.sum()) * (1.0 / (2 * n))


def retrieval_top1(z_g, z_i) -> float:
    """In-batch top-1 retrieval accuracy averaged over both directions."""
    a = np.asarray(as_tensor(z_g).data)
    b = np.asarray(as_tensor(z_i).data)
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    s = a @ b.T
    idx = np.arange(len(s))
    return 0.5 * (float(np.mean(s.argmax(axis=1) == idx)) + float(np.mean(s.argmax(axis=0) == idx)))


def loss_cst(pred, target, sample_ids):
    """Per-sample mean squared error over masked nodes, averaged over samples that have any.

    ``pred`` is ``(M, D_text)`` (already adapted), ``target`` the constant
    ``(M, D_text)`` initial features, ``sample_ids`` the owning sample of each
    row. Returns ``(loss, skipped)``; with no masked node the loss is 0.
    """
    sample_ids = np.asarray(sample_ids, dtype=np.int64)
    if len(sample_ids) == 0:
        return Tensor(0.0), True
    target = np.asarray(target, dtype=np.float64)
    _, inverse, counts = np.unique(sample_ids, return_inverse=True, return_counts=True)
    w = 1.0 / (counts[inverse] * len(counts) * target.shape[1])
    diff = pred - Tensor(target)
    return ((diff * diff).sum(axis=1) * w).sum(), False


def total_loss(l_rec, l_cont, l_cst, weights: LossWeights) -> Tensor:
    return (as_tensor(l_rec) * weights.alpha + as_tensor(l_cont) * weights.beta
            + as_tensor(l_cst) * weights.gamma)


def cst_adapter(ps: ParamSet, eps_or_masked: Tensor) -> Tensor:
    return eps_or_masked @ ps["cst.adapter.W"] + ps["cst.adapter.b"]
