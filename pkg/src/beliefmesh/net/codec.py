"""Binary wire format for belief messages.

Layout, all multi-byte values little-endian:

    magic "AIMP"                      4 bytes
    version                           u8  (= 1)
    origin segment count              u8
    per segment: length u16, then that many UTF-8 bytes
    coords flag                       u8  (0 or 1)
    if flag: x, y, z                  3 x f64
    factor_id                         u32
    timestamp                         u64
    precision                         f64
    vector length                     u16
    log-evidence entries              f64 x length
    CRC32 (IEEE) of all prior bytes   u32

The decoder is total: any byte buffer yields a message or a DecodeError,
never an unhandled exception or an out-of-bounds read.
"""

from __future__ import annotations

import math
import struct
import zlib

from .messages import BeliefMessage, SpatialAddress

MAGIC = b"AIMP"
VERSION = 1
MAX_SEGMENTS = 0xFF
MAX_SEGMENT_BYTES = 0xFFFF
MAX_VECTOR_LEN = 0xFFFF


class EncodeError(ValueError):
    pass


class SegmentTooLong(EncodeError):
    pass


class TooManySegments(EncodeError):
    pass


class VectorTooLong(EncodeError):
    pass


class DecodeError(ValueError):
    pass


class BadMagic(DecodeError):
    pass


class UnsupportedVersion(DecodeError):
    pass


class Truncated(DecodeError):
    pass


class CrcMismatch(DecodeError):
    pass


class NonFiniteValue(DecodeError):
    pass


class InvalidFieldValue(DecodeError):
    pass


class TrailingBytes(DecodeError):
    pass


def encode_message(msg: BeliefMessage) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<B", VERSION)
    segments = msg.origin.segments
    if len(segments) > MAX_SEGMENTS:
        raise TooManySegments(f"{len(segments)} segments, wire carries at most {MAX_SEGMENTS}")
    out += struct.pack("<B", len(segments))
    for seg in segments:
        raw = seg.encode("utf-8")
        if len(raw) > MAX_SEGMENT_BYTES:
            raise SegmentTooLong(f"segment of {len(raw)} bytes exceeds {MAX_SEGMENT_BYTES}")
        out += struct.pack("<H", len(raw))
        out += raw
    if msg.origin.coords is None:
        out += struct.pack("<B", 0)
    else:
        out += struct.pack("<B", 1)
        out += struct.pack("<3d", *msg.origin.coords)
    out += struct.pack("<I", msg.factor_id)
    out += struct.pack("<Q", msg.timestamp)
    out += struct.pack("<d", msg.precision)
    n = msg.log_evidence.size
    if n > MAX_VECTOR_LEN:
        raise VectorTooLong(f"vector of {n} entries exceeds {MAX_VECTOR_LEN}")
    out += struct.pack("<H", n)
    out += struct.pack(f"<{n}d", *msg.log_evidence)
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise Truncated(f"buffer ends inside {what}")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.take(8, what))[0]


def decode_message(buf: bytes) -> BeliefMessage:
    cur = _Cursor(bytes(buf))
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {magic!r}")
    version = cur.u8("version")
    if version != VERSION:
        raise UnsupportedVersion(f"version {version}, supported: {VERSION}")

    n_segments = cur.u8("segment count")
    raw_segments = []
    for i in range(n_segments):
        length = cur.u16(f"segment {i} length")
        raw_segments.append(cur.take(length, f"segment {i}"))
    coords_flag = cur.u8("coords flag")
    if coords_flag not in (0, 1):
        raise InvalidFieldValue(f"coords flag must be 0 or 1, got {coords_flag}")
    coords = None
    if coords_flag == 1:
        coords = struct.unpack("<3d", cur.take(24, "coords"))
    factor_id = cur.u32("factor_id")
    timestamp = cur.u64("timestamp")
    precision = cur.f64("precision")
    n = cur.u16("vector length")
    vector = struct.unpack(f"<{n}d", cur.take(8 * n, "log-evidence vector"))
    body_end = cur.pos
    stored_crc = cur.u32("crc")
    if cur.pos != len(cur.buf):
        raise TrailingBytes(f"{len(cur.buf) - cur.pos} bytes after the message")
    actual_crc = zlib.crc32(cur.buf[:body_end]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise CrcMismatch(f"stored {stored_crc:#010x}, computed {actual_crc:#010x}")

    # structure and integrity hold; now the field contents
    if n_segments < 1:
        raise InvalidFieldValue("origin needs at least one segment")
    segments = []
    for i, raw in enumerate(raw_segments):
        if len(raw) == 0:
            raise InvalidFieldValue(f"segment {i} is empty")
        try:
            seg = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidFieldValue(f"segment {i} is not UTF-8: {exc}") from exc
        if "/" in seg:
            raise InvalidFieldValue(f"segment {i} contains '/'")
        segments.append(seg)
    if coords is not None and not all(math.isfinite(c) for c in coords):
        raise NonFiniteValue("non-finite coordinate")
    if not math.isfinite(precision):
        raise NonFiniteValue(f"non-finite precision {precision}")
    if precision < 0:
        raise InvalidFieldValue(f"negative precision {precision}")
    if n < 1:
        raise InvalidFieldValue("log-evidence vector is empty")
    if not all(math.isfinite(v) for v in vector):
        raise NonFiniteValue("non-finite log-evidence entry")

    return BeliefMessage(
        origin=SpatialAddress(tuple(segments), coords),
        factor_id=factor_id,
        log_evidence=list(vector),
        precision=precision,
        timestamp=timestamp,
    )
