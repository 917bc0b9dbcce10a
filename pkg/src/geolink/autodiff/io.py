"""Tensor container: named float64 arrays with shape headers plus a JSON metadata block.

Layout (little-endian)::

    "GLTC" u16 version
    section "META": utf-8 JSON
    section "TENS": u32 count, then per tensor
        str name, u8 ndim, u64 dims[ndim], f64 data[prod(dims)]

Sections carry their own length and CRC32.
"""
from __future__ import annotations

import json
import os

import numpy as np

from ..binio import FormatError, Reader, Writer, read_section, write_section
from .params import ParamSet

MAGIC = b"GLTC"
VERSION = 1


def dumps_tensors(tensors: dict, meta: dict | None = None) -> bytes:
    body = Writer()
    body.u32(len(tensors))
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float64)
        body.str(name)
        body.u8(arr.ndim)
        for d in arr.shape:
            body.u64(d)
        body.array(arr)
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    write_section(w, b"META", json.dumps(meta or {}, sort_keys=True).encode("utf-8"))
    write_section(w, b"TENS", body.getvalue())
    return w.getvalue()


def loads_tensors(buf: bytes):
    r = Reader(buf)
    r.expect(MAGIC, "tensor container")
    at = r.pos
    version = r.u16()
    if version != VERSION:
        raise FormatError(f"unsupported tensor container version {version}", at)
    meta_r = read_section(r, b"META")
    try:
        meta = json.loads(meta_r.take(meta_r.end - meta_r.pos).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("invalid metadata JSON", meta_r.pos) from None
    t = read_section(r, b"TENS")
    tensors = {}
    for _ in range(t.u32()):
        name = t.str()
        ndim = t.u8()
        shape = tuple(t.u64() for _ in range(ndim))
        tensors[name] = t.array(int(np.prod(shape, dtype=np.int64)) if shape else 1).reshape(shape)
    if not t.done():
        raise FormatError("trailing bytes in tensor section", t.pos)
    return tensors, meta


def save_tensors(path, tensors: dict, meta: dict | None = None):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(dumps_tensors(tensors, meta))
    os.replace(tmp, path)


def load_tensors(path):
    with open(path, "rb") as fh:
        return loads_tensors(fh.read())


def save_checkpoint(path, params: ParamSet, meta: dict | None = None):
    """Parameters, AdamW moments and the step counter; bit-exact on reload."""
    tensors = {}
    for n, p in params.items():
        tensors[f"param/{n}"] = p.data
    for n, m in params.state["m"].items():
        tensors[f"adam_m/{n}"] = m
    for n, v in params.state["v"].items():
        tensors[f"adam_v/{n}"] = v
    meta = dict(meta or {})
    meta["step"] = int(params.state["t"])
    meta["param_names"] = params.names()
    save_tensors(path, tensors, meta)


def load_checkpoint(path):
    tensors, meta = load_tensors(path)
    params = ParamSet()
    for n in meta["param_names"]:
        params.add(n, tensors[f"param/{n}"])
    params.state["t"] = int(meta["step"])
    for key, prefix in (("m", "adam_m/"), ("v", "adam_v/")):
        params.state[key] = {k[len(prefix):]: v for k, v in tensors.items() if k.startswith(prefix)}
    return params, meta
