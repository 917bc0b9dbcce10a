"""AdamW with decoupled weight decay, and the warmup + cosine learning-rate schedule."""
from __future__ import annotations

import math

import numpy as np

from ..autodiff import ParamSet


def decays(name: str, value: np.ndarray) -> bool:
    """Weight decay applies to matrices only; biases, norms, tokens and vectors are exempt."""
    return value.ndim >= 2


def adamw_step(params: ParamSet, lr: float, beta1: float = 0.9, beta2: float = 0.95,
               weight_decay: float = 0.05, eps: float = 1e-8, clip_norm: float | None = None):
    """One in-place update from the gradients stored on ``params``; advances ``params.state``."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    st = params.state
    st["t"] += 1
    t = st["t"]
    grads = {n: params.grad(n) for n in params}
    if clip_norm is not None:
        gnorm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        if gnorm > clip_norm:
            scale = clip_norm / gnorm
            grads = {n: g * scale for n, g in grads.items()}
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = grads[name]
        m = st["m"].get(name)
        v = st["v"].get(name)
        m = (1.0 - beta1) * g if m is None else beta1 * m + (1.0 - beta1) * g
        v = (1.0 - beta2) * g * g if v is None else beta2 * v + (1.0 - beta2) * g * g
        st["m"][name], st["v"][name] = m, v
        if weight_decay and decays(name, p.data):
            p.data = p.data * (1.0 - lr * weight_decay)
        p.data = p.data - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def lr_at(step: int, base_lr: float, warmup_steps: int, total_steps: int, min_lr: float = 0.0) -> float:
    """Linear warmup to ``base_lr`` over ``warmup_steps``, then cosine decay to ``min_lr``.

    ``step`` counts from 0; the rate equals ``base_lr`` exactly at ``step == warmup_steps``.
    """
    if step < warmup_steps:
        return base_lr * (step + 1) / (warmup_steps + 1)
    span = max(total_steps - warmup_steps, 1)
    progress = min((step - warmup_steps) / span, 1.0)
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + math.cos(math.pi * progress))
