"""Wire format: exact layout, roundtrip identity, and decoder totality."""

import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefmesh.net import (
    BadMagic,
    BeliefMessage,
    CrcMismatch,
    DecodeError,
    InvalidFieldValue,
    NonFiniteValue,
    SegmentTooLong,
    SpatialAddress,
    TooManySegments,
    TrailingBytes,
    Truncated,
    UnsupportedVersion,
    VectorTooLong,
    decode_message,
    encode_message,
)


def minimal_message(**overrides):
    fields = dict(
        origin=SpatialAddress(("a",)),
        factor_id=0,
        log_evidence=np.array([0.0]),
        precision=0.0,
        timestamp=0,
    )
    fields.update(overrides)
    return BeliefMessage(**fields)


def random_message(rng):
    n_seg = int(rng.integers(1, 5))
    segments = tuple(
        "".join(rng.choice(list("abcdefgh-_0123456789αβγ"), size=rng.integers(1, 12)))
        for _ in range(n_seg)
    )
    coords = tuple(rng.normal(0, 100, size=3)) if rng.random() < 0.5 else None
    return BeliefMessage(
        origin=SpatialAddress(segments, coords),
        factor_id=int(rng.integers(0, 2**32)),
        log_evidence=rng.normal(0, 50, size=int(rng.integers(1, 20))),
        precision=float(rng.uniform(0, 10)),
        timestamp=int(rng.integers(0, 2**63)),
    )


def repack_crc(buf: bytearray) -> bytes:
    """Recompute the trailing CRC after editing a buffer by hand."""
    body = bytes(buf[:-4])
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


finite_f64 = st.floats(allow_nan=False, allow_infinity=False, width=64)

wire_messages = st.builds(
    BeliefMessage,
    origin=st.builds(
        SpatialAddress,
        segments=st.lists(
            st.text(min_size=1, max_size=8).filter(lambda s: "/" not in s),
            min_size=1,
            max_size=6,
        ).map(tuple),
        coords=st.none() | st.tuples(finite_f64, finite_f64, finite_f64),
    ),
    factor_id=st.integers(0, 2**32 - 1),
    log_evidence=st.lists(finite_f64, min_size=1, max_size=24).map(
        lambda xs: np.array(xs, dtype=np.float64)
    ),
    precision=st.floats(0.0, 1e300, allow_nan=False),
    timestamp=st.integers(0, 2**64 - 1),
)


class TestLayout:
    def test_minimal_message_is_44_bytes(self):
        wire = encode_message(minimal_message())
        assert len(wire) == 44

    def test_magic_and_version_bytes(self):
        wire = encode_message(minimal_message())
        assert wire[:4] == b"AIMP"
        assert wire[4] == 1

    def test_fields_sit_at_documented_offsets(self):
        msg = minimal_message(factor_id=0xDEADBEEF, timestamp=7, precision=2.5)
        wire = encode_message(msg)
        # 4 magic + 1 version + 1 count + 2 len + 1 "a" + 1 flag = offset 10
        assert struct.unpack_from("<I", wire, 10)[0] == 0xDEADBEEF
        assert struct.unpack_from("<Q", wire, 14)[0] == 7
        assert struct.unpack_from("<d", wire, 22)[0] == 2.5
        assert struct.unpack_from("<H", wire, 30)[0] == 1

    def test_all_little_endian_crc_is_ieee(self):
        wire = encode_message(minimal_message())
        body, stored = wire[:-4], struct.unpack("<I", wire[-4:])[0]
        assert stored == zlib.crc32(body) & 0xFFFFFFFF

    def test_coords_add_24_bytes(self):
        with_coords = minimal_message(origin=SpatialAddress(("a",), (1.0, 2.0, 3.0)))
        assert len(encode_message(with_coords)) == 44 + 24


class TestRoundtrip:
    def test_thousand_random_messages_bit_exact(self):
        rng = np.random.default_rng(101)
        for _ in range(1000):
            msg = random_message(rng)
            wire = encode_message(msg)
            back = decode_message(wire)
            assert back == msg
            assert encode_message(back) == wire

    def test_negative_zero_and_subnormals_survive(self):
        msg = minimal_message(log_evidence=np.array([-0.0, 5e-324, -5e-324]))
        back = decode_message(encode_message(msg))
        assert back.log_evidence.tobytes() == msg.log_evidence.tobytes()

    @settings(max_examples=200, deadline=None)
    @given(wire_messages)
    def test_decode_inverts_encode_on_the_whole_valid_domain(self, message):
        wire = encode_message(message)
        back = decode_message(wire)
        assert back == message
        # re-encoding must reproduce the exact bytes (pins -0.0, subnormals)
        assert encode_message(back) == wire


class TestEncodeErrors:
    def test_segment_too_long(self):
        msg = minimal_message(origin=SpatialAddress(("x" * 70000,)))
        with pytest.raises(SegmentTooLong):
            encode_message(msg)

    def test_too_many_segments(self):
        msg = minimal_message(origin=SpatialAddress(tuple(f"s{i}" for i in range(300))))
        with pytest.raises(TooManySegments):
            encode_message(msg)

    def test_vector_too_long(self):
        msg = minimal_message(log_evidence=np.zeros(70000))
        with pytest.raises(VectorTooLong):
            encode_message(msg)


class TestDecodeErrors:
    def test_truncated_by_one_byte(self):
        wire = encode_message(minimal_message())
        with pytest.raises(Truncated):
            decode_message(wire[:-1])

    def test_every_prefix_is_rejected_cleanly(self):
        wire = encode_message(random_message(np.random.default_rng(3)))
        for cut in range(len(wire)):
            with pytest.raises(DecodeError):
                decode_message(wire[:cut])

    def test_payload_bit_flip_is_crc_mismatch(self):
        wire = bytearray(encode_message(minimal_message(precision=1.0)))
        wire[25] ^= 0x10  # inside the precision f64
        with pytest.raises(CrcMismatch):
            decode_message(bytes(wire))

    def test_crc_field_flips_always_detected(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            wire = bytearray(encode_message(random_message(rng)))
            bit = int(rng.integers(0, 32))
            wire[-4 + bit // 8] ^= 1 << (bit % 8)
            with pytest.raises(CrcMismatch):
                decode_message(bytes(wire))

    def test_bad_magic(self):
        wire = bytearray(encode_message(minimal_message()))
        wire[0] = ord("X")
        with pytest.raises(BadMagic):
            decode_message(bytes(wire))

    def test_unsupported_version(self):
        wire = bytearray(encode_message(minimal_message()))
        wire[4] = 2
        with pytest.raises(UnsupportedVersion):
            decode_message(bytes(wire))

    def test_trailing_bytes(self):
        wire = encode_message(minimal_message())
        with pytest.raises(TrailingBytes):
            decode_message(wire + b"\x00")

    def test_nan_precision(self):
        wire = bytearray(encode_message(minimal_message()))
        struct.pack_into("<d", wire, 22, float("nan"))
        with pytest.raises(NonFiniteValue):
            decode_message(repack_crc(wire))

    def test_negative_precision(self):
        wire = bytearray(encode_message(minimal_message()))
        struct.pack_into("<d", wire, 22, -1.0)
        with pytest.raises(InvalidFieldValue):
            decode_message(repack_crc(wire))

    def test_infinite_log_evidence(self):
        wire = bytearray(encode_message(minimal_message()))
        struct.pack_into("<d", wire, 32, float("inf"))
        with pytest.raises(NonFiniteValue):
            decode_message(repack_crc(wire))

    def test_zero_segments(self):
        # hand-built: magic, version, count=0, no coords, ids, empty vector
        body = b"AIMP" + bytes([1, 0, 0])
        body += struct.pack("<I", 0) + struct.pack("<Q", 0) + struct.pack("<d", 0.0)
        body += struct.pack("<H", 1) + struct.pack("<d", 0.0)
        wire = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
        with pytest.raises(InvalidFieldValue):
            decode_message(wire)

    def test_slash_inside_segment(self):
        wire = bytearray(encode_message(minimal_message()))
        wire[8] = ord("/")  # the single segment byte
        with pytest.raises(InvalidFieldValue):
            decode_message(repack_crc(wire))

    def test_bad_coords_flag(self):
        wire = bytearray(encode_message(minimal_message()))
        wire[9] = 7
        with pytest.raises(InvalidFieldValue):
            decode_message(repack_crc(wire))

    def test_empty_buffer(self):
        with pytest.raises(DecodeError):
            decode_message(b"")


class TestFuzz:
    def test_decoder_is_total(self):
        rng = np.random.default_rng(999)
        seed_messages = [encode_message(random_message(rng)) for _ in range(20)]
        crashes = 0
        for i in range(10_000):
            mode = i % 3
            if mode == 0:
                buf = rng.bytes(int(rng.integers(0, 120)))
            elif mode == 1:
                base = seed_messages[int(rng.integers(len(seed_messages)))]
                buf = base[: int(rng.integers(0, len(base) + 1))]
            else:
                base = bytearray(seed_messages[int(rng.integers(len(seed_messages)))])
                for _ in range(int(rng.integers(1, 6))):
                    base[int(rng.integers(len(base)))] ^= 1 << int(rng.integers(8))
                buf = bytes(base)
            try:
                decode_message(buf)
            except DecodeError:
                pass
            except Exception:
                crashes += 1
        assert crashes == 0
