import json
import subprocess
import sys

import numpy as np
import pytest

from geolink.autodiff import load_checkpoint, load_tensors
from geolink.pipeline import read_shard
from geolink.pipeline.cli import main

MODEL = {
    "image_size": 16, "patch_size": 4, "d_patch": 16, "enc_depth": 1, "enc_heads": 2,
    "dec_dim": 16, "dec_depth": 1, "dec_heads": 2, "d_text": 16, "d_node": 16,
    "d_fusion": 16, "fusion_heads": 2, "d_proj": 16, "d_pe": 16,
}


def toml_text(out, shard, seed=0, epochs=2, extra=None):
    sections = {"model": dict(MODEL), "schedule": {"epochs": epochs, "warmup_epochs": 1,
                                                  "batch_size": 4, "base_lr": 1e-3},
                "data": {"shards": [str(shard)]}, "output": {"dir": str(out)}}
    for sec, values in (extra or {}).items():
        sections.setdefault(sec, {}).update(values)
    lines = [f"seed = {seed}"]
    for sec, values in sections.items():
        lines.append(f"[{sec}]")
        for k, v in values.items():
            lines.append(f"{k} = {json.dumps(v)}")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    spec = root / "spec.json"
    spec.write_text(json.dumps({"image_size": 16, "d_text": 16, "shapes_min": 2, "shapes_max": 4}))
    assert main(["synth-gen", "--spec", str(spec), "--count", "10", "--seed", "4", "--out", str(root)]) == 0
    return root / "shard-00000.glsh"


def pretrain(tmp_path, corpus, name="run", resume=False, **kw):
    cfg = tmp_path / f"{name}.toml"
    cfg.write_text(toml_text(tmp_path / name, corpus, **kw))
    args = ["pretrain", "--config", str(cfg)] + (["--resume"] if resume else [])
    return main(args), tmp_path / name


def same_tensors(p, q):
    # metadata differs only by the output directory; the arrays must match bit for bit
    (a, _), (b, _) = load_tensors(p), load_tensors(q)
    return list(a) == list(b) and all(a[k].tobytes() == b[k].tobytes() for k in a)


def test_synth_gen_writes_shard_and_ledger(corpus):
    samples = read_shard(corpus)
    ledger = json.loads((corpus.parent / "ledger.json").read_text())
    assert len(samples) == 10
    assert [sc["id"] for sc in ledger["scenes"]] == [s.id for s in samples]


def test_pretrain_embed_inspect(tmp_path, corpus, capsys):
    code, out = pretrain(tmp_path, corpus)
    assert code == 0
    records = [json.loads(x) for x in (out / "metrics.ndjson").read_text().splitlines()]
    assert [r["step"] for r in records] == list(range(6))
    assert all(np.isfinite(r["total"]) for r in records)
    params, meta = load_checkpoint(out / "checkpoint.gltc")
    assert meta["loop_step"] == 6 and meta["step"] == 6
    assert json.loads((out / "run_config.json").read_text())["model"]["d_pe"] == 16

    emb = tmp_path / "emb.gltc"
    assert main(["embed", "--ckpt", str(out / "checkpoint.gltc"), "--shard", str(corpus),
                 "--out", str(emb), "--fused"]) == 0
    tensors, emeta = load_tensors(emb)
    first = read_shard(corpus)[0]
    assert tensors[f"{first.id}/z_I"].shape == (16,)
    assert tensors[f"{first.id}/eps_RO"].shape == (16, 16)
    assert tensors[f"{first.id}/eps_OR"].shape[0] == len(first.objects)
    assert emeta["fused"] is True

    capsys.readouterr()
    for path, fmt in ((corpus, "GLSH"), (emb, "GLTC")):
        assert main(["inspect", str(path)]) == 0
        assert json.loads(capsys.readouterr().out)["format"] == fmt


def test_same_seed_gives_identical_metrics(tmp_path, corpus):
    assert pretrain(tmp_path, corpus, "a", seed=9)[0] == 0
    assert pretrain(tmp_path, corpus, "b", seed=9)[0] == 0
    assert pretrain(tmp_path, corpus, "c", seed=10)[0] == 0
    a, b, c = ((tmp_path / n / "metrics.ndjson").read_bytes() for n in "abc")
    assert a == b
    assert a != c
    assert same_tensors(tmp_path / "a" / "checkpoint.gltc", tmp_path / "b" / "checkpoint.gltc")


def test_resume_reproduces_uninterrupted_run(tmp_path, corpus):
    from geolink.pipeline import load_config, pretrain as run
    assert pretrain(tmp_path, corpus, "full")[0] == 0
    cfg_path = tmp_path / "part.toml"
    cfg_path.write_text(toml_text(tmp_path / "part", corpus))
    run(load_config(cfg_path), stop_after=2)
    assert len((tmp_path / "part" / "metrics.ndjson").read_text().splitlines()) == 2
    assert main(["pretrain", "--config", str(cfg_path), "--resume"]) == 0
    assert ((tmp_path / "part" / "metrics.ndjson").read_bytes()
            == (tmp_path / "full" / "metrics.ndjson").read_bytes())
    assert same_tensors(tmp_path / "part" / "checkpoint.gltc", tmp_path / "full" / "checkpoint.gltc")


def test_config_errors_exit_2(tmp_path, corpus):
    code, _ = pretrain(tmp_path, corpus, extra={"model": {"foo": 1}})
    assert code == 2
    assert main(["pretrain", "--config", str(tmp_path / "absent.toml")]) == 2
    assert main(["inspect", str(tmp_path / "absent.bin")]) == 2
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"NOPE1234")
    assert main(["inspect", str(junk)]) == 2


def test_image_size_mismatch_exits_2(tmp_path, corpus):
    code, _ = pretrain(tmp_path, corpus, extra={"model": {"image_size": 32}})
    assert code == 2


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_numeric_failure_exits_3_and_keeps_last_good_state(tmp_path, corpus):
    code, out = pretrain(tmp_path, corpus, extra={"schedule": {"base_lr": 1e300, "warmup_epochs": 0},
                                                  "optim": {"clip_norm": 0}})
    assert code == 3
    _, meta = load_checkpoint(out / "checkpoint.gltc")
    lines = (out / "metrics.ndjson").read_text().splitlines()
    assert meta["loop_step"] == len(lines)


def test_build_dataset_with_nothing_kept_exits_1(tmp_path):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"pairs": [{"id": "x", "image": "x.npy", "osm": "x.json",
                                               "window": [0, 0, 1, 1]}]}))
    assert main(["build-dataset", "--manifest", str(manifest), "--out", str(tmp_path / "o")]) == 1


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "geolink.pipeline.cli", "--help"],
                         capture_output=True, text=True, check=True)
    for cmd in ("build-dataset", "synth-gen", "pretrain", "embed", "inspect"):
        assert cmd in res.stdout
