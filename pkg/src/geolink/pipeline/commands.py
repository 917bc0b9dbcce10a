"""Implementations behind the command-line subcommands."""
from __future__ import annotations

import json
import logging
from collections import Counter
from pathlib import Path

import numpy as np

from ..autodiff import load_checkpoint, load_tensors, no_grad, save_tensors
from ..binio import FormatError
from ..geometry import Relation
from ..graph import TYPES, build_graph, deserialize_graph, graph_to_json, mask_nodes
from ..model import ModelConfig, batch_graphs, forward, full_plan
from ..osm import compute_tag_stats, read_glem
from .shards import loads_shard, write_shard
from .synth import SyntheticSceneSpec, synth_gen

log = logging.getLogger(__name__)

TYPE_NAMES = ("point", "polyline", "polygon")


def read_spec(path) -> SyntheticSceneSpec:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".toml":
        from .config import tomllib
        doc = tomllib.loads(text)
    else:
        doc = json.loads(text)
    return SyntheticSceneSpec.from_dict(doc)


def cmd_synth_gen(spec: SyntheticSceneSpec, count: int, seed: int, out_dir) -> dict:
    samples, ledger = synth_gen(spec, count, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_shard(out / "shard-00000.glsh", samples)
    (out / "ledger.json").write_text(json.dumps(ledger, indent=1) + "\n")
    return {"samples": len(samples), "shard": str(out / "shard-00000.glsh"), "ledger": str(out / "ledger.json")}


def embed_samples(params, cfg: ModelConfig, samples, fused: bool = False) -> dict:
    """Full-visibility encodings per sample, keyed ``<sample id>/<name>``."""
    out = {}
    for s in samples:
        if s.image.shape != (cfg.image_size, cfg.image_size, cfg.channels):
            raise ValueError(f"sample {s.id}: image {s.image.shape} does not match the checkpoint "
                             f"({cfg.image_size}x{cfg.image_size}x{cfg.channels})")
        for o in s.objects:
            if o.sigma is None or len(o.sigma) != cfg.d_text:
                raise ValueError(f"sample {s.id}: object features do not have dimension {cfg.d_text}")
        g = build_graph(s.objects, seed=0, d_text=cfg.d_text)
        with no_grad():
            enc = forward(params, cfg, s.image[None], batch_graphs([g], None, cfg.d_text),
                          [full_plan(cfg.num_patches)], decode=False, fused=fused)
        out[f"{s.id}/eps_I"] = enc.eps_i.data[0]
        out[f"{s.id}/eps_G"] = enc.eps_g.data[0]
        out[f"{s.id}/z_I"] = enc.z_i.data[0]
        out[f"{s.id}/z_G"] = enc.z_g.data[0]
        if fused:
            out[f"{s.id}/eps_RO"] = enc.eps_ro.data[0]
            out[f"{s.id}/eps_OR"] = enc.eps_or.data
    return out


def cmd_embed(ckpt, shard, out_path, fused: bool = False) -> dict:
    params, meta = load_checkpoint(ckpt)
    cfg = ModelConfig.from_dict(meta["config"]["model"])
    samples = loads_shard(Path(shard).read_bytes())
    tensors = embed_samples(params, cfg, samples, fused)
    save_tensors(out_path, tensors, {"checkpoint_step": meta.get("loop_step", meta["step"]),
                                     "samples": [s.id for s in samples], "fused": fused})
    return {"samples": len(samples), "tensors": len(tensors), "out": str(out_path)}


def _relation_histogram(graphs) -> dict:
    hist = Counter()
    for g in graphs:
        for (s, t), (_, _, rel) in g.edges.items():
            for r in rel:
                hist[f"{TYPE_NAMES[s]}->{TYPE_NAMES[t]}:{Relation(int(r)).name}"] += 1
    return dict(sorted(hist.items()))


def inspect_graph(g) -> dict:
    d = graph_to_json(g)
    d["num_edges"] = g.num_edges
    d["relation_histogram"] = _relation_histogram([g])
    return d


def inspect_shard(samples, top_k: int = 10, preview: int = 3) -> dict:
    graphs = [build_graph(s.objects, seed=0, d_text=len(s.objects[0].sigma) if s.objects and
                          s.objects[0].sigma is not None else 0) for s in samples]
    node_counts = {n: int(sum(g.count(t) for g in graphs)) for n, t in zip(TYPE_NAMES, TYPES)}
    stats = compute_tag_stats(o for s in samples for o in s.objects)
    previews = []
    for s, g in list(zip(samples, graphs))[:preview]:
        plan = mask_nodes(g, 0.2, np.random.default_rng(0))
        previews.append({"id": s.id, "masked": {n: [int(i) for i in plan.masked[t]]
                                                for n, t in zip(TYPE_NAMES, TYPES)}})
    return {
        "format": "GLSH",
        "samples": len(samples),
        "node_counts": node_counts,
        "edge_count": int(sum(g.num_edges for g in graphs)),
        "objects_per_sample": [len(s.objects) for s in samples],
        "relation_histogram": _relation_histogram(graphs),
        "tag_counts": dict(sorted(stats.counts.items())),
        "tag_top": stats.top(top_k),
        "mask_preview": previews,
    }


def cmd_inspect(path) -> dict:
    """Summarise a shard, graph, tensor container or embedding table by its magic bytes."""
    path = Path(path)
    buf = path.read_bytes()
    magic = buf[:4]
    if magic == b"GLSH":
        return inspect_shard(loads_shard(buf))
    if magic == b"GLGR":
        return inspect_graph(deserialize_graph(buf))
    if magic == b"GLTC":
        tensors, meta = load_tensors(path)
        return {"format": "GLTC", "meta": meta,
                "tensors": {k: list(v.shape) for k, v in tensors.items()}}
    if magic == b"GLEM":
        table = read_glem(path)
        dims = {len(v) for v in table.values()}
        return {"format": "GLEM", "count": len(table), "dim": dims.pop() if dims else 0}
    raise FormatError(f"unrecognised file magic {magic!r}", 0)
