"""Little-endian binary reading/writing helpers shared by the file formats."""
from __future__ import annotations

import struct
import zlib

import numpy as np


class FormatError(ValueError):
    """Malformed binary input; ``offset`` is the byte position where decoding failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class Writer:
    def __init__(self):
        self._parts = []

    def raw(self, b: bytes):
        self._parts.append(bytes(b))

    def u8(self, v):
        self.raw(struct.pack("<B", v))

    def u16(self, v):
        self.raw(struct.pack("<H", v))

    def u32(self, v):
        self.raw(struct.pack("<I", v))

    def u64(self, v):
        self.raw(struct.pack("<Q", v))

    def f64(self, v):
        self.raw(struct.pack("<d", v))

    def str(self, s: str):
        b = s.encode("utf-8")
        self.u32(len(b))
        self.raw(b)

    def array(self, a, dtype="<f8"):
        self.raw(np.ascontiguousarray(a, dtype=dtype).tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, buf: bytes, offset: int = 0, end: int | None = None):
        self.buf = memoryview(buf)
        self.pos = offset
        self.end = len(buf) if end is None else end

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > self.end:
            raise FormatError(f"truncated input: need {n} bytes, {self.end - self.pos} left", self.pos)
        out = bytes(self.buf[self.pos:self.pos + n])
        self.pos += n
        return out

    def u8(self):
        return struct.unpack("<B", self.take(1))[0]

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u64(self):
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self):
        return struct.unpack("<d", self.take(8))[0]

    def str(self) -> str:
        start = self.pos
        n = self.u32()
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("invalid UTF-8 string", start) from None

    def array(self, count: int, dtype="<f8") -> np.ndarray:
        dt = np.dtype(dtype)
        raw = self.take(count * dt.itemsize)
        return np.frombuffer(raw, dtype=dt).astype(dt.newbyteorder("="), copy=True)

    def expect(self, magic: bytes, what: str):
        start = self.pos
        got = self.take(len(magic))
        if got != magic:
            raise FormatError(f"bad magic for {what}: {got!r}", start)

    def done(self) -> bool:
        return self.pos >= self.end


def crc32(b) -> int:
    return zlib.crc32(b) & 0xFFFFFFFF


def write_section(w: Writer, tag: bytes, payload: bytes):
    """``tag[4] | u64 length | payload | u32 crc32(payload)``."""
    w.raw(tag)
    w.u64(len(payload))
    w.raw(payload)
    w.u32(crc32(payload))


def read_section(r: Reader, tag: bytes) -> Reader:
    start = r.pos
    got = r.take(4)
    if got != tag:
        raise FormatError(f"expected section {tag!r}, found {got!r}", start)
    length_at = r.pos
    n = r.u64()
    if n > r.end - r.pos:
        raise FormatError(f"section {tag!r} length {n} exceeds remaining input", length_at)
    body_at = r.pos
    payload = r.take(n)
    crc_at = r.pos
    if r.u32() != crc32(payload):
        raise FormatError(f"checksum mismatch in section {tag!r}", crc_at)
    return Reader(r.buf, body_at, body_at + n)
