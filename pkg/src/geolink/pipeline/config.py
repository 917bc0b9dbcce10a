"""Run configuration: one TOML file with fixed sections.

::

    seed = 0

    [model]      # ModelConfig fields
    [loss]       # alpha, beta, gamma, tau
    [optim]      # beta1, beta2, weight_decay, eps, clip_norm (0 = off)
    [schedule]   # epochs, warmup_epochs, base_lr, min_lr, batch_size, max_steps (0 = no cap)
    [data]       # shards (list, relative to the config file), augment, embeddings (GLEM path or "")
    [output]     # dir, checkpoint_every (steps, 0 = only at the end)

Unknown keys are rejected; errors name the offending field path.
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..model import ConfigError, ModelConfig
from ..ssl import LossWeights, OptimConfig


@dataclass(frozen=True)
class ScheduleConfig:
    epochs: int = 10
    warmup_epochs: int = 5
    base_lr: float = 1e-4
    min_lr: float = 0.0
    batch_size: int = 16
    max_steps: int = 0


@dataclass(frozen=True)
class DataConfig:
    shards: tuple = ()
    augment: bool = True
    embeddings: str = ""


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "run"
    checkpoint_every: int = 0


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    optim: OptimConfig = field(default_factory=OptimConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    data: DataConfig = field(default_factory=DataConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    base_dir: str = "."

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    @property
    def out_dir(self) -> Path:
        return self.resolve(self.output.dir)

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "model": self.model.to_dict(),
            "loss": asdict(self.loss),
            "optim": asdict(self.optim),
            "schedule": asdict(self.schedule),
            "data": {**asdict(self.data), "shards": list(self.data.shards)},
            "output": asdict(self.output),
        }
        if d["optim"]["clip_norm"] is None:
            d["optim"]["clip_norm"] = 0.0
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_SECTIONS = {"schedule": ScheduleConfig, "data": DataConfig, "output": OutputConfig,
             "loss": LossWeights, "optim": OptimConfig}


def _check_types(cls, section: str, values: dict):
    defaults = {f.name: getattr(cls(), f.name) for f in fields(cls)}
    for k, v in values.items():
        if k not in defaults:
            raise ConfigError(f"{section}.{k}", "unknown key")
        ref = defaults[k]
        ok = True
        if isinstance(ref, bool):
            ok = isinstance(v, bool)
        elif isinstance(ref, int):
            ok = isinstance(v, int) and not isinstance(v, bool)
        elif isinstance(ref, float) or ref is None:
            ok = isinstance(v, (int, float)) and not isinstance(v, bool)
        elif isinstance(ref, str):
            ok = isinstance(v, str)
        elif isinstance(ref, tuple):
            ok = isinstance(v, list) and all(isinstance(x, str) for x in v)
        if not ok:
            raise ConfigError(f"{section}.{k}", f"wrong type {type(v).__name__}")


def _model_section(values: dict) -> ModelConfig:
    defaults = ModelConfig()
    for k, v in values.items():
        if not hasattr(defaults, k):
            raise ConfigError(f"model.{k}", "unknown key")
        ref = getattr(defaults, k)
        if isinstance(ref, bool) and not isinstance(v, bool):
            raise ConfigError(f"model.{k}", f"wrong type {type(v).__name__}")
        if isinstance(ref, float) and isinstance(v, int) and not isinstance(v, bool):
            values = {**values, k: float(v)}
    return ModelConfig.from_dict(values)


def config_from_dict(doc: dict, base_dir=".") -> RunConfig:
    doc = dict(doc)
    for k in doc:
        if k not in ("seed", "model", *_SECTIONS):
            raise ConfigError(k, "unknown key")
        if k != "seed" and not isinstance(doc[k], dict):
            raise ConfigError(k, "must be a table")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    model = _model_section(dict(doc.get("model", {})))
    parts = {}
    for name, cls in _SECTIONS.items():
        values = dict(doc.get(name, {}))
        _check_types(cls, name, values)
        if name == "data" and "shards" in values:
            values["shards"] = tuple(values["shards"])
        if name == "optim" and values.get("clip_norm") in (0, 0.0):
            values["clip_norm"] = None
        try:
            parts[name] = cls(**values)
        except ValueError as exc:
            raise ConfigError(name, str(exc)) from None
    s = parts["schedule"]
    for k in ("epochs", "batch_size"):
        if getattr(s, k) <= 0:
            raise ConfigError(f"schedule.{k}", "must be positive")
    for k in ("warmup_epochs", "max_steps"):
        if getattr(s, k) < 0:
            raise ConfigError(f"schedule.{k}", "must be non-negative")
    if not s.base_lr > 0:
        raise ConfigError("schedule.base_lr", "must be positive")
    if not 0 <= s.min_lr <= s.base_lr:
        raise ConfigError("schedule.min_lr", "must lie in [0, base_lr]")
    if parts["output"].checkpoint_every < 0:
        raise ConfigError("output.checkpoint_every", "must be non-negative")
    o = parts["optim"]
    if not (0 <= o.beta1 < 1 and 0 <= o.beta2 < 1):
        raise ConfigError("optim.beta1", "betas must lie in [0, 1)")
    if o.weight_decay < 0:
        raise ConfigError("optim.weight_decay", "must be non-negative")
    return RunConfig(model, parts["loss"], o, s, parts["data"], parts["output"], seed, str(base_dir))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"invalid TOML: {exc}") from None
    return config_from_dict(doc, path.parent)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def dumps_config(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    lines = [f"seed = {d.pop('seed')}", ""]
    for section, values in d.items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in values.items()]
        lines.append("")
    return "\n".join(lines)
