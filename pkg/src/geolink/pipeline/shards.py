"""Paired samples and the shard container.

Shard layout (little-endian)::

    "GLSH" u16 version
    section "SMPL" per sample (see ``_write_sample``)
    section "INDX": u32 count, u64 offset[count] (byte offset of each SMPL tag)
    u64 offset of the INDX tag, "GLSE"

The fixed-size trailer lets a reader jump straight to the index.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from ..binio import FormatError, Reader, Writer, read_section, write_section
from ..geometry import NodeType
from ..graph.io import _read_geom, _write_geom
from ..osm.tags import GeoObject

MAGIC = b"GLSH"
TRAILER = b"GLSE"
VERSION = 1


@dataclass(frozen=True, eq=False)
class PairedSample:
    id: str
    image: np.ndarray  # (H, W, 3) float64 in [0, 1]
    objects: tuple
    window: tuple = (0.0, 0.0, 1.0, 1.0)  # (min_lon, min_lat, max_lon, max_lat) of the source
    timestamp: str = ""
    meta: dict = field(default_factory=dict)  # free-form, e.g. synthetic class label

    def with_objects(self, objects) -> "PairedSample":
        return replace(self, objects=tuple(objects))

    def __eq__(self, other):
        return (isinstance(other, PairedSample) and self.id == other.id
                and self.image.shape == other.image.shape
                and self.image.tobytes() == other.image.tobytes()
                and self.objects == other.objects and tuple(self.window) == tuple(other.window)
                and self.timestamp == other.timestamp and self.meta == other.meta)

    __hash__ = None


def _write_sample(s: PairedSample) -> bytes:
    w = Writer()
    w.str(s.id)
    w.str(s.timestamp)
    for v in s.window:
        w.f64(v)
    w.str(json.dumps(s.meta, sort_keys=True))
    h, wd, c = s.image.shape
    w.u32(h)
    w.u32(wd)
    w.u32(c)
    w.array(s.image)
    w.u32(len(s.objects))
    for o in s.objects:
        w.str(o.id)
        w.u8(int(o.kind))
        w.u32(len(o.tags))
        for k, v in o.tags:
            w.str(k)
            w.str(v)
        _write_geom(w, o.geom)
        if o.sigma is None:
            w.u32(0)
        else:
            w.u32(len(o.sigma))
            w.array(o.sigma)
    return w.getvalue()


def _read_sample(r: Reader) -> PairedSample:
    sid = r.str()
    ts = r.str()
    window = tuple(r.f64() for _ in range(4))
    at = r.pos
    try:
        meta = json.loads(r.str())
    except json.JSONDecodeError:
        raise FormatError("invalid sample metadata", at) from None
    h, wd, c = r.u32(), r.u32(), r.u32()
    image = r.array(h * wd * c).reshape(h, wd, c)
    objects = []
    for _ in range(r.u32()):
        at = r.pos
        oid = r.str()
        kind = r.u8()
        if kind > 2:
            raise FormatError(f"unknown geometry kind {kind}", at)
        tags = tuple((r.str(), r.str()) for _ in range(r.u32()))
        try:
            geom = _read_geom(r, NodeType(kind))
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(f"invalid geometry for {oid!r}: {exc}", at) from None
        n = r.u32()
        sigma = r.array(n) if n else None
        objects.append(GeoObject(oid, geom, tags, sigma))
    if not r.done():
        raise FormatError("trailing bytes in sample record", r.pos)
    return PairedSample(sid, image, tuple(objects), window, ts, meta)


def dumps_shard(samples) -> bytes:
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    offsets, pos = [], 6
    for s in samples:
        payload = _write_sample(s)
        offsets.append(pos)
        write_section(w, b"SMPL", payload)
        pos += 4 + 8 + len(payload) + 4
    idx = Writer()
    idx.u32(len(offsets))
    for off in offsets:
        idx.u64(off)
    write_section(w, b"INDX", idx.getvalue())
    w.u64(pos)
    w.raw(TRAILER)
    return w.getvalue()


def _index(buf: bytes):
    if len(buf) < 6 + 12:
        raise FormatError("file too short for a shard", 0)
    r = Reader(buf)
    r.expect(MAGIC, "shard")
    at = r.pos
    version = r.u16()
    if version != VERSION:
        raise FormatError(f"unsupported shard version {version}", at)
    tail = Reader(buf, len(buf) - 12)
    index_at = tail.u64()
    tail.expect(TRAILER, "shard trailer")
    if not 6 <= index_at <= len(buf) - 12:
        raise FormatError(f"index offset {index_at} out of range", len(buf) - 12)
    ir = read_section(Reader(buf, index_at, len(buf) - 12), b"INDX")
    n = ir.u32()
    offsets = [ir.u64() for _ in range(n)]
    if not ir.done():
        raise FormatError("trailing bytes in shard index", ir.pos)
    return offsets, index_at


def loads_shard(buf: bytes) -> list:
    offsets, index_at = _index(buf)
    out = []
    expected = 6
    for off in offsets:
        if off != expected:
            raise FormatError(f"index entry {off} does not match record position {expected}", off)
        r = Reader(buf, off, index_at)
        body = read_section(r, b"SMPL")
        out.append(_read_sample(body))
        expected = r.pos
    if expected != index_at:
        raise FormatError("unindexed bytes before shard index", expected)
    return out


def read_sample_at(buf: bytes, i: int) -> PairedSample:
    offsets, index_at = _index(buf)
    if not 0 <= i < len(offsets):
        raise IndexError(f"sample {i} out of range for shard of {len(offsets)}")
    return _read_sample(read_section(Reader(buf, offsets[i], index_at), b"SMPL"))


def write_shard(path, samples):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(dumps_shard(samples))
    os.replace(tmp, path)


def read_shard(path) -> list:
    with open(path, "rb") as fh:
        return loads_shard(fh.read())
