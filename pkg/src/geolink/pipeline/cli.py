"""``geolink`` command-line entry point.

Exit codes: 0 success, 1 runtime failure (e.g. no pair survived dataset
construction), 2 invalid configuration or unreadable input, 3 numeric
failure during training.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from ..binio import FormatError
from ..model import ConfigError

log = logging.getLogger("geolink")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geolink", description="Paired image / map-object pretraining toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-dataset", help="pair images with Overpass payloads into shards")
    b.add_argument("--manifest", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--embeddings", default="", help="GLEM lookup table (default: hashed n-gram provider)")
    b.add_argument("--d-text", type=int, default=64)
    b.add_argument("--overlap-threshold", type=float, default=None)

    s = sub.add_parser("synth-gen", help="generate synthetic paired scenes")
    s.add_argument("--spec", required=True, help="JSON or TOML scene spec")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)

    t = sub.add_parser("pretrain", help="run pretraining from a TOML config")
    t.add_argument("--config", required=True)
    t.add_argument("--resume", action="store_true", help="continue from the checkpoint in the output dir")

    e = sub.add_parser("embed", help="encode a shard with a checkpoint")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--shard", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--fused", action="store_true", help="also write fused patch/object encodings")

    i = sub.add_parser("inspect", help="print a JSON summary of a shard, graph, tensor or GLEM file")
    i.add_argument("path")
    return p


def _print(obj):
    json.dump(obj, sys.stdout, indent=1, sort_keys=False, default=str)
    sys.stdout.write("\n")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        log.error("invalid configuration at %s", exc)
        return 2


def _dispatch(args) -> int:
    if args.command == "build-dataset":
        from ..osm import HashedNgramProvider, LookupTableProvider
        from .dataset import DatasetError, build_dataset
        fallback = HashedNgramProvider(args.d_text)
        try:
            provider = (LookupTableProvider.load(args.embeddings, fallback=fallback)
                        if args.embeddings else fallback)
            report = build_dataset(args.manifest, args.out, provider, args.overlap_threshold)
        except (OSError, FormatError, ValueError) as exc:
            log.error("%s", exc)
            return 2
        except DatasetError as exc:
            log.error("%s", exc)
            return 1
        _print({"kept": len(report.kept), "dropped": len(report.dropped), "shards": report.shards})
        return 0

    if args.command == "synth-gen":
        from .commands import cmd_synth_gen, read_spec
        try:
            spec = read_spec(args.spec)
        except (OSError, ValueError, TypeError) as exc:
            log.error("cannot read scene spec: %s", exc)
            return 2
        if args.count < 0:
            log.error("--count must be non-negative")
            return 2
        _print(cmd_synth_gen(spec, args.count, args.seed, args.out))
        return 0

    if args.command == "pretrain":
        from .config import load_config
        from .train import TrainingAborted, pretrain
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            log.error("cannot read config: %s", exc)
            return 2
        try:
            summary = pretrain(cfg, resume=args.resume)
        except TrainingAborted as exc:
            log.error("%s; last good state saved", exc)
            return 3
        except (OSError, FormatError, ValueError) as exc:
            log.error("%s", exc)
            return 2
        _print(summary)
        return 0

    if args.command == "embed":
        from .commands import cmd_embed
        try:
            _print(cmd_embed(args.ckpt, args.shard, args.out, args.fused))
        except (OSError, FormatError, KeyError, ValueError) as exc:
            log.error("%s", exc)
            return 2
        return 0

    if args.command == "inspect":
        from .commands import cmd_inspect
        try:
            _print(cmd_inspect(args.path))
        except (OSError, FormatError, ValueError) as exc:
            log.error("cannot inspect %s: %s", args.path, exc)
            return 2
        return 0
    return 2  # unreachable: argparse enforces a known subcommand


if __name__ == "__main__":
    sys.exit(main())
