"""Pretraining loop: batching, augmentation, schedule, metrics and checkpoints.

Every random draw is keyed by ``(seed, step, ...)`` rather than taken from a
running generator, so a resumed run replays exactly the batches, augmentations
and mask plans the uninterrupted run would have used.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..autodiff import NumericError, load_checkpoint, save_checkpoint
from ..graph import build_graph
from ..model import init_params
from ..ssl import lr_at, train_step
from .augment import augment_pair
from .config import RunConfig
from .shards import read_shard

log = logging.getLogger(__name__)

CHECKPOINT = "checkpoint.gltc"
METRICS = "metrics.ndjson"
RUN_CONFIG = "run_config.json"


def worker_count() -> int:
    """Thread cap from ``GEOLINK_THREADS`` (default 1)."""
    raw = os.environ.get("GEOLINK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer GEOLINK_THREADS=%r", raw)
        return 1


def load_samples(cfg: RunConfig) -> list:
    samples = []
    for s in cfg.data.shards:
        samples.extend(read_shard(cfg.resolve(s)))
    if not samples:
        raise ValueError("no training samples in the configured shards")
    return samples


@dataclass(frozen=True)
class Plan:
    n_samples: int
    batch_size: int
    epochs: int
    warmup_epochs: int
    max_steps: int = 0

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(self.n_samples / self.batch_size)

    @property
    def total_steps(self) -> int:
        n = self.epochs * self.steps_per_epoch
        return min(n, self.max_steps) if self.max_steps else n

    @property
    def warmup_steps(self) -> int:
        return self.warmup_epochs * self.steps_per_epoch


def batch_indices(plan: Plan, seed: int, step: int) -> np.ndarray:
    epoch, k = divmod(step, plan.steps_per_epoch)
    perm = np.random.default_rng([seed, epoch, 1]).permutation(plan.n_samples)
    return perm[k * plan.batch_size:(k + 1) * plan.batch_size]


def prepare_batch(samples, cfg: RunConfig, step: int, augment: bool, pool=None):
    """Augment (optionally) and build graphs; returns ``(images, graphs, meta)``."""

    def one(j_sample):
        j, s = j_sample
        if augment:
            s = augment_pair(s, np.random.default_rng([cfg.seed, step, 2, j]))
        return s.image, build_graph(s.objects, seed=cfg.seed, d_text=cfg.model.d_text)

    items = list(enumerate(samples))
    results = list(pool.map(one, items)) if pool is not None else [one(it) for it in items]
    images = np.stack([r[0] for r in results])
    return images, [r[1] for r in results]


def _check_data(samples, cfg: RunConfig):
    size = cfg.model.image_size
    for s in samples:
        if s.image.shape != (size, size, cfg.model.channels):
            raise ValueError(f"sample {s.id} has image shape {s.image.shape}, config expects {size}x{size}")
        for o in s.objects:
            if o.sigma is None or len(o.sigma) != cfg.model.d_text:
                raise ValueError(f"sample {s.id} object {o.id} lacks a {cfg.model.d_text}-dim feature")


class TrainingAborted(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"numeric failure at step {step}: {cause}")
        self.step = step


def pretrain(cfg: RunConfig, resume: bool = False, samples=None, stop_after: int | None = None) -> dict:
    """Run (or continue) pretraining. Returns a summary with the last LossReport record.

    ``stop_after`` ends the run early after that many total steps (used to
    exercise resume); the schedule still spans the full plan.
    """
    samples = load_samples(cfg) if samples is None else list(samples)
    _check_data(samples, cfg)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / RUN_CONFIG).write_text(cfg.to_json() + "\n")
    ckpt_path = out / CHECKPOINT
    metrics_path = out / METRICS

    plan = Plan(len(samples), cfg.schedule.batch_size, cfg.schedule.epochs,
                cfg.schedule.warmup_epochs, cfg.schedule.max_steps)
    if resume and ckpt_path.exists():
        params, meta = load_checkpoint(ckpt_path)
        start = int(meta["loop_step"])
        if meta.get("config", {}).get("model") != cfg.model.to_dict():
            raise ValueError("checkpoint model configuration differs from the run config")
        kept = []
        if metrics_path.exists():
            for line in metrics_path.read_text().splitlines():
                if line and json.loads(line)["step"] < start:
                    kept.append(line + "\n")
        metrics_path.write_text("".join(kept))
    else:
        params = init_params(cfg.model, cfg.seed)
        start = 0
        metrics_path.write_text("")

    end = plan.total_steps if stop_after is None else min(plan.total_steps, stop_after)
    meta_base = {"config": cfg.to_dict(), "total_steps": plan.total_steps}
    last = None
    threads = worker_count()
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        with open(metrics_path, "a") as mf:
            for step in range(start, end):
                idx = batch_indices(plan, cfg.seed, step)
                images, graphs = prepare_batch([samples[i] for i in idx], cfg, step, cfg.data.augment, pool)
                lr = lr_at(step, cfg.schedule.base_lr, plan.warmup_steps, plan.total_steps, cfg.schedule.min_lr)
                good = params.copy()
                try:
                    rep = train_step(params, cfg.model, cfg.loss, images, graphs,
                                     np.random.default_rng([cfg.seed, step, 3]), lr, cfg.optim)
                except (NumericError, FloatingPointError) as exc:
                    save_checkpoint(ckpt_path, good, {**meta_base, "loop_step": step})
                    raise TrainingAborted(step, exc) from exc
                last = {**rep.record(step), "lr": lr}
                mf.write(json.dumps(last) + "\n")
                mf.flush()
                done = step + 1
                every = cfg.output.checkpoint_every
                if (every and done % every == 0) or done == end:
                    save_checkpoint(ckpt_path, params, {**meta_base, "loop_step": done})
    finally:
        if pool is not None:
            pool.shutdown()
    return {"steps": end, "total_steps": plan.total_steps, "last": last,
            "checkpoint": str(ckpt_path), "metrics": str(metrics_path)}


