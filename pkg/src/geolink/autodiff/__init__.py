"""Minimal reverse-mode automatic differentiation over dense float64 arrays."""
from .gradcheck import (
    GRAD_FLOOR,
    GradCheckReport,
    NonDeterministicError,
    finite_diff_check,
    finite_diff_report,
)
from .io import load_checkpoint, load_tensors, loads_tensors, dumps_tensors, save_checkpoint, save_tensors
from .params import ParamSet
from .tensor import (
    NumericError,
    ShapeError,
    Tensor,
    add,
    as_tensor,
    attention_weights,
    concat,
    div,
    exp,
    gather_rows,
    gelu,
    getitem,
    l2_normalize,
    layer_norm,
    leaky_relu,
    log,
    log_softmax,
    matmul,
    mean,
    mse,
    mul,
    neg,
    no_grad,
    reshape,
    scaled_dot_attention,
    scatter_add_rows,
    segment_softmax,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
    transpose,
    unbroadcast,
)

__all__ = [name for name in dir() if not name.startswith("_")]
