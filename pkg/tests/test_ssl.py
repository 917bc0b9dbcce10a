import math

import numpy as np
import pytest

from geolink.autodiff import ParamSet, Tensor
from geolink.graph import build_graph
from geolink.model import init_params
from geolink.ssl import (
    LossWeights, OptimConfig, adamw_step, compute_losses, draw_plans, loss_cont, loss_cst,
    loss_rec, lr_at, retrieval_top1, total_loss, train_step,
)
from conftest import scene_objects

EXACT = 1e-12


# -- loss identities --------------------------------------------------------------------------


def test_loss_cont_single_pair_is_zero(rng):
    assert abs(float(loss_cont(rng.normal(size=(1, 8)), rng.normal(size=(1, 8))).data)) <= EXACT


def test_loss_rec_of_identical_is_zero(rng):
    x = rng.normal(size=(2, 5, 12))
    assert float(loss_rec(Tensor(x), x).data) == 0.0


def test_total_with_default_weights():
    assert abs(float(total_loss(2.0, 3.0, 5.0, LossWeights()).data) - 2.08) <= EXACT


def test_loss_cont_orthogonal_pairs_closed_form():
    z = np.eye(2)
    # matched cosine 1, mismatched 0, tau 0.2 -> -log(e^5 / (e^5 + 1)) in both directions
    assert float(loss_cont(z, z, 0.2).data) == pytest.approx(math.log1p(math.exp(-5)), abs=EXACT)


def test_loss_cont_scale_invariant_and_symmetric(rng):
    zg, zi = rng.normal(size=(6, 8)), rng.normal(size=(6, 8))
    base = float(loss_cont(zg, zi).data)
    for c in (1e-3, 0.5, 7.0, 1e4):
        assert abs(float(loss_cont(c * zg, c * zi).data) - base) <= 1e-10
    assert abs(float(loss_cont(zi, zg).data) - base) <= 1e-12


def test_loss_cont_manual(rng):
    zg, zi = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    a = zg / np.linalg.norm(zg, axis=1, keepdims=True)
    b = zi / np.linalg.norm(zi, axis=1, keepdims=True)
    s = a @ b.T / 0.2
    row = -np.mean(np.diag(s) - np.log(np.exp(s).sum(axis=1)))
    col = -np.mean(np.diag(s) - np.log(np.exp(s).sum(axis=0)))
    assert float(loss_cont(zg, zi, 0.2).data) == pytest.approx((row + col) / 2, abs=1e-12)


def test_retrieval_top1():
    z = np.eye(4)
    assert retrieval_top1(z, z) == 1.0
    assert retrieval_top1(z, z[::-1]) == 0.0


def test_loss_cst_averages_per_sample_then_over_samples(rng):
    pred, target = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
    loss, skipped = loss_cst(Tensor(pred), target, [0, 0, 4])
    sq = ((pred - target) ** 2).mean(axis=1)
    assert not skipped
    assert float(loss.data) == pytest.approx(0.5 * (sq[:2].mean() + sq[2]), abs=1e-15)
    loss, skipped = loss_cst(Tensor(np.zeros((0, 2))), np.zeros((0, 2)), [])
    assert skipped and float(loss.data) == 0.0


def test_norm_pix_target(rng):
    target = rng.normal(3.0, 2.0, size=(1, 2, 12))
    mu, sd = target.mean(-1, keepdims=True), np.sqrt(target.var(-1, keepdims=True) + 1e-6)
    assert float(loss_rec(Tensor((target - mu) / sd), target, norm_pix=True).data) == pytest.approx(0, abs=1e-24)


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(beta=-1)
    with pytest.raises(ValueError):
        LossWeights(tau=0)


# -- optimizer ----------------------------------------------------------------------------------


def test_lr_schedule():
    assert lr_at(0, 1.0, 4, 20) == pytest.approx(0.2)
    assert lr_at(3, 1.0, 4, 20) == pytest.approx(0.8)
    assert lr_at(4, 1.0, 4, 20) == 1.0
    assert lr_at(12, 1.0, 4, 20) == pytest.approx(0.5)
    assert lr_at(20, 1.0, 4, 20, min_lr=0.1) == pytest.approx(0.1)
    rates = [lr_at(s, 1.0, 4, 20) for s in range(4, 21)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert lr_at(0, 1.0, 0, 10) == 1.0


def test_adamw_matches_manual_update(rng):
    ps = ParamSet()
    ps.add("w", rng.normal(size=(2, 2)))
    ps.add("b", rng.normal(size=2))
    w0, b0 = ps["w"].data.copy(), ps["b"].data.copy()
    grads = [rng.normal(size=(2, 2)) for _ in range(2)], [rng.normal(size=2) for _ in range(2)]
    m = {"w": 0, "b": 0}
    v = {"w": 0, "b": 0}
    ref = {"w": w0, "b": b0}
    lr, b1, b2, wd, eps = 0.01, 0.9, 0.95, 0.05, 1e-8
    for t in (1, 2):
        ps["w"].grad, ps["b"].grad = grads[0][t - 1], grads[1][t - 1]
        adamw_step(ps, lr, b1, b2, wd, eps)
        for name, g in (("w", grads[0][t - 1]), ("b", grads[1][t - 1])):
            m[name] = b1 * m[name] + (1 - b1) * g
            v[name] = b2 * v[name] + (1 - b2) * g * g
            decay = (1 - lr * wd) if name == "w" else 1.0
            mh, vh = m[name] / (1 - b1 ** t), v[name] / (1 - b2 ** t)
            ref[name] = ref[name] * decay - lr * mh / (np.sqrt(vh) + eps)
    np.testing.assert_allclose(ps["w"].data, ref["w"], atol=1e-15)
    np.testing.assert_allclose(ps["b"].data, ref["b"], atol=1e-15)
    assert ps.state["t"] == 2


def test_adamw_clip_and_lr_check(rng):
    ps = ParamSet()
    ps.add("w", np.zeros(3))
    ps["w"].grad = np.array([300.0, 400.0, 0.0])
    adamw_step(ps, 0.1, clip_norm=1.0)
    np.testing.assert_allclose(ps.state["m"]["w"], 0.1 * np.array([0.6, 0.8, 0.0]))
    with pytest.raises(ValueError):
        adamw_step(ps, 0.0)


# -- step ---------------------------------------------------------------------------------------


@pytest.fixture
def toy_batch(rng):
    graphs = [build_graph(scene_objects()), build_graph(scene_objects()[2:])]
    return rng.random((2, 16, 16, 3)), graphs


def test_zero_lr_leaves_state_untouched(toy_cfg, toy_batch):
    images, graphs = toy_batch
    ps = init_params(toy_cfg, 0)
    before = {n: ps[n].data.tobytes() for n in ps}
    rep = train_step(ps, toy_cfg, LossWeights(), images, graphs, np.random.default_rng(0), 0.0)
    assert all(ps[n].data.tobytes() == before[n] for n in ps)
    assert ps.state["t"] == 0
    assert np.isfinite(rep.total)


def test_training_steps_reduce_loss(toy_cfg, toy_batch):
    images, graphs = toy_batch
    ps = init_params(toy_cfg, 0)
    w = LossWeights()

    def evaluate():
        rng = np.random.default_rng(42)
        ip, npl = draw_plans(toy_cfg, graphs, rng)
        return compute_losses(ps, toy_cfg, w, images, graphs, ip, npl).total

    start = evaluate()
    for k in range(15):
        train_step(ps, toy_cfg, w, images, graphs, np.random.default_rng(k), 3e-3)
    assert evaluate() < 0.7 * start


def test_gamma_zero_skips_consistency(toy_cfg, toy_batch):
    images, graphs = toy_batch
    ps = init_params(toy_cfg, 0)
    ip, npl = draw_plans(toy_cfg, graphs, np.random.default_rng(0))
    rep = compute_losses(ps, toy_cfg, LossWeights(gamma=0.0), images, graphs, ip, npl)
    assert rep.cst_skipped and rep.l_cst == 0.0
    full = compute_losses(ps, toy_cfg, LossWeights(), images, graphs, ip, npl)
    assert full.l_rec == rep.l_rec and full.l_cont == rep.l_cont
    rec = full.record(3)
    assert rec["step"] == 3 and "total_tensor" not in rec


def test_report_is_deterministic(toy_cfg, toy_batch):
    images, graphs = toy_batch
    reps = []
    for _ in range(2):
        ps = init_params(toy_cfg, 0)
        reps.append(train_step(ps, toy_cfg, LossWeights(), images, graphs, np.random.default_rng(9), 1e-3,
                               OptimConfig(clip_norm=1.0)))
    assert reps[0] == reps[1]
