"""Functional layers over a :class:`ParamSet`, addressed by name prefix."""
from __future__ import annotations

import math

import numpy as np

from ..autodiff import (
    ParamSet, Tensor, concat, gelu, layer_norm, scaled_dot_attention, sigmoid, slice_, tanh, transpose,
)

NEG_INF = -1e30


def init_linear(ps: ParamSet, name: str, d_in: int, d_out: int, rng, bias: bool = True, zero=False):
    """Xavier-uniform weight, zero bias."""
    if zero:
        w = np.zeros((d_in, d_out))
    else:
        lim = math.sqrt(6.0 / (d_in + d_out))
        w = rng.uniform(-lim, lim, size=(d_in, d_out))
    ps.add(f"{name}.W", w)
    if bias:
        ps.add(f"{name}.b", np.zeros(d_out))


def linear(ps: ParamSet, name: str, x) -> Tensor:
    y = x @ ps[f"{name}.W"]
    b = f"{name}.b"
    return y + ps[b] if b in ps else y


def init_ln(ps: ParamSet, name: str, d: int):
    ps.add(f"{name}.g", np.ones(d))
    ps.add(f"{name}.b", np.zeros(d))


def ln(ps: ParamSet, name: str, x) -> Tensor:
    return layer_norm(x, ps[f"{name}.g"], ps[f"{name}.b"])


def init_mha(ps: ParamSet, name: str, d: int, rng):
    for part in ("q", "k", "v", "o"):
        init_linear(ps, f"{name}.{part}", d, d, rng)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, n, d = x.shape
    x = x.reshape(*lead, n, heads, d // heads)
    k = len(lead)
    return transpose(x, tuple(range(k)) + (k + 1, k, k + 2))


def _merge_heads(x: Tensor) -> Tensor:
    *lead, h, n, dh = x.shape
    k = len(lead)
    x = transpose(x, tuple(range(k)) + (k + 1, k, k + 2))
    return x.reshape(*lead, n, h * dh)


def mha(ps: ParamSet, name: str, q_in, k_in, v_in, heads: int, key_mask=None) -> Tensor:
    """Multi-head attention over ``(..., L, D)`` inputs.

    ``key_mask`` is an optional boolean ``(..., Lk)`` array; False keys are ignored.
    """
    q = _split_heads(linear(ps, f"{name}.q", q_in), heads)
    k = _split_heads(linear(ps, f"{name}.k", k_in), heads)
    v = _split_heads(linear(ps, f"{name}.v", v_in), heads)
    bias = None
    if key_mask is not None:
        km = np.asarray(key_mask, dtype=bool)
        bias = np.where(km, 0.0, NEG_INF)[..., None, None, :]
    return linear(ps, f"{name}.o", _merge_heads(scaled_dot_attention(q, k, v, bias)))


def init_mlp(ps: ParamSet, name: str, d: int, hidden: int, rng):
    init_linear(ps, f"{name}.fc1", d, hidden, rng)
    init_linear(ps, f"{name}.fc2", hidden, d, rng)


def mlp(ps: ParamSet, name: str, x) -> Tensor:
    return linear(ps, f"{name}.fc2", gelu(linear(ps, f"{name}.fc1", x)))


def init_block(ps: ParamSet, name: str, d: int, mlp_ratio: int, rng):
    init_ln(ps, f"{name}.ln1", d)
    init_mha(ps, f"{name}.attn", d, rng)
    init_ln(ps, f"{name}.ln2", d)
    init_mlp(ps, f"{name}.mlp", d, d * mlp_ratio, rng)


def block(ps: ParamSet, name: str, x, heads: int) -> Tensor:
    """Pre-norm transformer block."""
    h = ln(ps, f"{name}.ln1", x)
    x = x + mha(ps, f"{name}.attn", h, h, h, heads)
    return x + mlp(ps, f"{name}.mlp", ln(ps, f"{name}.ln2", x))


def init_lstm(ps: ParamSet, name: str, d_in: int, d: int, rng):
    init_linear(ps, name, d_in + d, 4 * d, rng)


def lstm_cell(ps: ParamSet, name: str, x, h, c):
    gates = linear(ps, name, concat([x, h], axis=-1))
    d = h.shape[-1]
    i = sigmoid(slice_(gates, 0, d))
    f = sigmoid(slice_(gates, d, 2 * d))
    g = tanh(slice_(gates, 2 * d, 3 * d))
    o = sigmoid(slice_(gates, 3 * d, 4 * d))
    c = f * c + i * g
    return o * tanh(c), c
