"""Datasets, augmentation, configuration, training loop and CLI commands."""
from .augment import Jitter, apply_pair, augment_pair, draw_jitter, draw_transform, transform_image
from .config import (
    DataConfig, OutputConfig, RunConfig, ScheduleConfig, config_from_dict, dumps_config, load_config,
)
from .dataset import BuildReport, DatasetError, build_dataset
from .shards import PairedSample, dumps_shard, loads_shard, read_sample_at, read_shard, write_shard
from .synth import SyntheticSceneSpec, generate_scene, rasterize, synth_gen
from .train import Plan, TrainingAborted, pretrain, worker_count

__all__ = [
    "BuildReport", "DataConfig", "DatasetError", "Jitter", "OutputConfig", "PairedSample", "Plan",
    "RunConfig", "ScheduleConfig", "SyntheticSceneSpec", "TrainingAborted", "apply_pair",
    "augment_pair", "build_dataset", "config_from_dict", "draw_jitter", "draw_transform",
    "dumps_config", "dumps_shard", "generate_scene", "load_config", "loads_shard", "pretrain",
    "rasterize", "read_sample_at", "read_shard", "synth_gen", "transform_image", "worker_count",
    "write_shard",
]
