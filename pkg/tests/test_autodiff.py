import numpy as np
import pytest

from geolink.autodiff import (
    NonDeterministicError, NumericError, ParamSet, ShapeError, Tensor, attention_weights,
    concat, dumps_tensors, exp, finite_diff_check, gather_rows, gelu, getitem, l2_normalize,
    layer_norm, leaky_relu, load_checkpoint, loads_tensors, log, log_softmax, mean, mse,
    no_grad, reshape, save_checkpoint, scaled_dot_attention, scatter_add_rows,
    segment_softmax, sigmoid, slice_, softmax, sum_, tanh, transpose,
)
from geolink.binio import FormatError

TOL = 1e-6


def _params(rng, **shapes):
    ps = ParamSet()
    for name, shape in shapes.items():
        ps.add(name, rng.normal(size=shape))
    return ps


def _weighted(y, rng_seed=99):
    """Reduce to a scalar with fixed random weights so every output coordinate matters."""
    w = np.random.default_rng(rng_seed).normal(size=y.shape)
    return sum_(y * w)


CASES = {
    "add_broadcast": (dict(a=(3, 4), b=(4,)), lambda p: p["a"] + p["b"]),
    "sub_div": (dict(a=(3, 4), b=(3, 1)), lambda p: (p["a"] - p["b"]) / (exp(p["b"]) + 1.0)),
    "mul_neg": (dict(a=(2, 3), b=(2, 3)), lambda p: -(p["a"] * p["b"])),
    "matmul_batched": (dict(a=(2, 3, 4), b=(4, 5)), lambda p: p["a"] @ p["b"]),
    "sum_mean_axes": (dict(a=(2, 3, 4)), lambda p: mean(sum_(p["a"], axis=1, keepdims=True), axis=2)),
    "reshape_transpose": (dict(a=(2, 3, 4)), lambda p: transpose(reshape(p["a"], (6, 4)), (1, 0))),
    "getitem_slice": (dict(a=(5, 4)), lambda p: concat([getitem(p["a"], np.s_[1:3]), slice_(p["a"], 0, 2, axis=0)], axis=0)),
    "gather_scatter": (dict(a=(4, 3)), lambda p: scatter_add_rows(gather_rows(p["a"], np.array([0, 2, 2, 3, 1])), np.array([1, 1, 0, 2, 0]), 3)),
    "log_exp": (dict(a=(3, 3)), lambda p: log(exp(p["a"]) + 2.0)),
    "tanh_sigmoid": (dict(a=(3, 3)), lambda p: tanh(p["a"]) * sigmoid(p["a"])),
    "gelu": (dict(a=(4, 4)), lambda p: gelu(p["a"])),
    "leaky_relu": (dict(a=(4, 4)), lambda p: leaky_relu(p["a"] + 0.05)),
    "softmax": (dict(a=(3, 5)), lambda p: softmax(p["a"], axis=-1)),
    "log_softmax_axis0": (dict(a=(3, 5)), lambda p: log_softmax(p["a"], axis=0)),
    "segment_softmax": (dict(a=(7, 1)), lambda p: segment_softmax(p["a"], np.array([0, 0, 1, 2, 2, 2, 1]), 3)),
    "layer_norm": (dict(a=(3, 6), g=(6,), b=(6,)), lambda p: layer_norm(p["a"], p["g"], p["b"])),
    "l2_normalize": (dict(a=(3, 4)), lambda p: l2_normalize(p["a"])),
    "mse": (dict(a=(3, 4), b=(3, 4)), lambda p: mse(p["a"], p["b"])),
    "attention_bias": (dict(q=(2, 3, 4), k=(2, 5, 4), v=(2, 5, 3)),
                       lambda p: scaled_dot_attention(p["q"], p["k"], p["v"],
                                                      bias=np.array([0, 0, -1e30, 0, 0.0]))),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_op_gradients(name, rng):
    shapes, fn = CASES[name]
    ps = _params(rng, **shapes)
    err = finite_diff_check(lambda: _weighted(fn(ps)), ps, eps=1e-6)
    assert err < TOL, name


def test_reused_input_accumulates(rng):
    ps = _params(rng, x=(3,))
    y = sum_(ps["x"] * ps["x"] + ps["x"])
    y.backward()
    np.testing.assert_allclose(ps.grad("x"), 2 * ps["x"].data + 1)


def test_backward_requires_scalar():
    t = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeError):
        (t * 2).backward()


def test_shape_errors():
    a, b = Tensor(np.ones((2, 3))), Tensor(np.ones((4, 5)))
    with pytest.raises(ShapeError):
        a + b
    with pytest.raises(ShapeError):
        a @ b
    with pytest.raises(ShapeError):
        mse(a, Tensor(np.ones((3, 2))))


def test_non_finite_raises():
    with pytest.raises(NumericError):
        log(Tensor(np.array([-1.0])))
    with pytest.raises(NumericError):
        l2_normalize(Tensor(np.zeros((1, 3))))


def test_no_grad_records_nothing():
    x = Tensor(np.ones(2), requires_grad=True)
    with no_grad():
        y = x * 3
    assert not y.requires_grad


def test_masked_key_gets_zero_attention(rng):
    q, k = rng.normal(size=(1, 2, 4)), rng.normal(size=(1, 3, 4))
    w = attention_weights(q, k, bias=np.array([0.0, -1e30, 0.0]))
    assert np.all(w[..., 1] == 0.0)
    np.testing.assert_allclose(w.sum(-1), 1.0)


def test_finite_diff_detects_wrong_gradient(rng):
    from geolink.autodiff.tensor import _result
    ps = _params(rng, x=(4,))

    def bad_square(a):
        return _result("bad", a.data ** 2, (a,), lambda g: (g * a.data,))  # missing factor 2

    assert finite_diff_check(lambda: sum_(bad_square(ps["x"])), ps) > 0.1


def test_finite_diff_rejects_nondeterminism(rng):
    ps = _params(rng, x=(2,))
    noise = np.random.default_rng(0)
    with pytest.raises(NonDeterministicError):
        finite_diff_check(lambda: sum_(ps["x"] * noise.normal()), ps)


def test_tensor_container_round_trip(rng):
    tensors = {"a": rng.normal(size=(2, 3)), "scalar": np.array(1.5), "empty": np.zeros((0, 4))}
    raw = dumps_tensors(tensors, {"k": [1, 2]})
    back, meta = loads_tensors(raw)
    assert meta == {"k": [1, 2]}
    for k, v in tensors.items():
        assert back[k].shape == v.shape and back[k].tobytes() == v.tobytes()
    assert dumps_tensors(back, meta) == raw
    with pytest.raises(FormatError):
        loads_tensors(raw[:-1])
    flipped = bytearray(raw)
    flipped[-5] ^= 1
    with pytest.raises(FormatError):
        loads_tensors(bytes(flipped))


def test_checkpoint_round_trip_is_bit_exact(tmp_path, rng):
    ps = _params(rng, w=(3, 3), b=(3,))
    ps.state["t"] = 7
    ps.state["m"] = {"w": rng.normal(size=(3, 3)), "b": rng.normal(size=3)}
    ps.state["v"] = {"w": rng.random((3, 3)), "b": rng.random(3)}
    path = tmp_path / "c.gltc"
    save_checkpoint(path, ps, {"note": "x"})
    back, meta = load_checkpoint(path)
    assert meta["note"] == "x" and meta["step"] == 7
    assert back.names() == ps.names()
    for n in ps:
        assert back[n].data.tobytes() == ps[n].data.tobytes()
        assert back.state["m"][n].tobytes() == ps.state["m"][n].tobytes()
        assert back.state["v"][n].tobytes() == ps.state["v"][n].tobytes()
