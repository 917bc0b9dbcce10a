"""Paired dataset construction from a manifest of images and Overpass payloads.

Manifest (JSON)::

    {
      "image_size": 32,                # optional; images must match when given
      "overlap_threshold": 0.5,        # optional; window IoU above this drops the later pair
      "pairs": [
        {"id": "a", "image": "a.npy", "osm": "a.json",
         "window": [min_lon, min_lat, max_lon, max_lat], "timestamp": "2023-05-01"}
      ]
    }

Paths are relative to the manifest. Images are ``.npy`` arrays (float in
[0, 1] or uint8) or, with Pillow installed, PNG/JPEG files.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..osm import OverpassParseError, Window, clean, compute_tag_stats, embed_object, parse_overpass
from .shards import PairedSample, write_shard

log = logging.getLogger(__name__)

SHARD_SIZE = 1024


class DatasetError(RuntimeError):
    pass


@dataclass
class BuildReport:
    kept: list = field(default_factory=list)
    dropped: list = field(default_factory=list)  # {"id", "reason"}
    shards: list = field(default_factory=list)

    def drop(self, pid, reason):
        log.warning("dropping pair %s: %s", pid, reason)
        self.dropped.append({"id": pid, "reason": reason})

    def to_dict(self) -> dict:
        return {"kept": self.kept, "dropped": self.dropped, "shards": self.shards,
                "n_kept": len(self.kept), "n_dropped": len(self.dropped)}


def load_image(path: Path) -> np.ndarray:
    if path.suffix == ".npy":
        img = np.load(path, allow_pickle=False)
    else:
        try:
            from PIL import Image
        except ImportError:
            raise DatasetError(f"{path}: reading {path.suffix} images needs Pillow (pip install artifact[images])")
        with Image.open(path) as im:
            img = np.asarray(im.convert("RGB"))
    if img.dtype == np.uint8:
        img = img.astype(np.float64) / 255.0
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if not np.isfinite(img).all() or img.min() < 0 or img.max() > 1:
        raise ValueError("pixel values must lie in [0, 1]")
    return img


def window_iou(a, b) -> float:
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def build_dataset(manifest_path, out_dir, provider, overlap_threshold: float | None = None,
                  shard_size: int = SHARD_SIZE) -> BuildReport:
    """Parse, clean, deduplicate by window overlap, embed with corpus-wide tag
    statistics and write shards. Per-pair failures are logged and counted."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read manifest {manifest_path}: {exc}") from None
    base = manifest_path.parent
    size = manifest.get("image_size")
    if overlap_threshold is None:
        overlap_threshold = float(manifest.get("overlap_threshold", 0.5))
    report = BuildReport()
    staged, windows = [], []
    for entry in manifest.get("pairs", []):
        pid = str(entry.get("id", "?"))
        try:
            window = tuple(float(v) for v in entry["window"])
            if len(window) != 4 or window[2] <= window[0] or window[3] <= window[1]:
                raise ValueError(f"bad window {entry['window']}")
            img = load_image(base / entry["image"])
            if size is not None and img.shape[:2] != (size, size):
                raise ValueError(f"image is {img.shape[0]}x{img.shape[1]}, manifest expects {size}x{size}")
            payload = (base / entry["osm"]).read_bytes()
            objects = clean(parse_overpass(payload, window=Window(*window)))
        except (KeyError, OSError, ValueError, OverpassParseError, DatasetError) as exc:
            report.drop(pid, f"{type(exc).__name__}: {exc}")
            continue
        if not objects:
            report.drop(pid, "no OSM objects survive parsing and cleaning")
            continue
        clash = next((k for k, w in enumerate(windows) if window_iou(w, window) > overlap_threshold), None)
        if clash is not None:
            report.drop(pid, f"window overlaps kept pair {staged[clash].id}")
            continue
        windows.append(window)
        staged.append(PairedSample(pid, img, tuple(objects), window, str(entry.get("timestamp", ""))))
    if not staged:
        raise DatasetError("no pairs survived dataset construction")

    stats = compute_tag_stats(o for s in staged for o in s.objects)
    samples = [s.with_objects(o.with_sigma(embed_object(o, provider, stats)) for o in s.objects)
               for s in staged]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(0, len(samples), shard_size):
        name = f"shard-{k // shard_size:05d}.glsh"
        write_shard(out / name, samples[k:k + shard_size])
        report.shards.append(name)
    report.kept = [s.id for s in samples]
    (out / "tag_stats.json").write_text(json.dumps(dict(sorted(stats.counts.items())), indent=1) + "\n")
    (out / "build_report.json").write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    return report
