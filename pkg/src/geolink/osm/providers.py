"""Text-embedding providers for tag strings.

``HashedNgramProvider`` is the deterministic stand-in for a language model:
character n-grams and word tokens hashed (BLAKE2b, fixed key) into a signed
bag of features, then L2-normalised. ``LookupTableProvider`` serves
precomputed vectors from a GLEM file::

    "GLEM" u32 dim u32 count, then per entry:
        u32 byte length, UTF-8 text, dim little-endian f32 values
"""
from __future__ import annotations

import hashlib
import re
import struct
from functools import lru_cache

import numpy as np

from ..binio import FormatError, Reader
from .tags import EmbeddingError

GLEM_MAGIC = b"GLEM"


class HashedNgramProvider:
    def __init__(self, dim: int = 64, ngrams=(2, 3, 4)):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.ngrams = tuple(ngrams)
        self._embed = lru_cache(maxsize=65536)(self._compute)

    def _features(self, text: str):
        s = f"^{text.lower()}$"
        for n in self.ngrams:
            for i in range(len(s) - n + 1):
                yield "c:" + s[i:i + n]
        for tok in re.split(r"[:\s_;,]+", text.lower()):
            if tok:
                yield "w:" + tok

    def _compute(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        for feat in self._features(text):
            h = int.from_bytes(hashlib.blake2b(feat.encode("utf-8"), digest_size=8,
                                               key=b"geolink").digest(), "little")
            v[h % self.dim] += 1.0 if (h >> 63) & 1 else -1.0
        norm = np.linalg.norm(v)
        if norm == 0.0:
            v[0] = 1.0
            return v
        return v / norm

    def embed(self, text: str) -> np.ndarray:
        return self._embed(text).copy()


class LookupTableProvider:
    """Precomputed embeddings; unknown strings go to ``fallback`` or raise :class:`EmbeddingError`."""

    def __init__(self, table: dict, fallback=None):
        dims = {np.asarray(v).shape for v in table.values()}
        if len(dims) > 1:
            raise ValueError("lookup table vectors have inconsistent dimensions")
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self.dim = dims.pop()[0] if dims else (fallback.dim if fallback else 0)
        if fallback is not None and fallback.dim != self.dim:
            raise ValueError(f"fallback dim {fallback.dim} != table dim {self.dim}")
        self.fallback = fallback

    @classmethod
    def load(cls, path, fallback=None) -> "LookupTableProvider":
        return cls(read_glem(path), fallback=fallback)

    def embed(self, text: str) -> np.ndarray:
        v = self.table.get(text)
        if v is not None:
            return v.copy()
        if self.fallback is not None:
            return self.fallback.embed(text)
        raise EmbeddingError(text, KeyError("not in lookup table"))


def write_glem(path, table: dict):
    items = list(table.items())
    dim = len(items[0][1]) if items else 0
    with open(path, "wb") as fh:
        fh.write(GLEM_MAGIC + struct.pack("<II", dim, len(items)))
        for text, vec in items:
            b = text.encode("utf-8")
            vec = np.asarray(vec, dtype="<f4")
            if vec.shape != (dim,):
                raise ValueError(f"vector for {text!r} has shape {vec.shape}, expected ({dim},)")
            fh.write(struct.pack("<I", len(b)) + b + vec.tobytes())


def read_glem(path) -> dict:
    with open(path, "rb") as fh:
        r = Reader(fh.read())
    r.expect(GLEM_MAGIC, "embedding table")
    dim, count = r.u32(), r.u32()
    out = {}
    for _ in range(count):
        at = r.pos
        text = r.str()
        if text in out:
            raise FormatError(f"duplicate entry {text!r}", at)
        out[text] = r.array(dim, "<f4").astype(np.float64)
    if not r.done():
        raise FormatError("trailing bytes after last entry", r.pos)
    return out
