import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sievegaps.errors import BadHeaderError, BadMagicError, BadVersionError, ChecksumError, PhiMismatchError, ResourceError
from sievegaps.gapcycle import GapCycle
from sievegaps.snapshot import SnapshotHeader, fnv1a64, read_header, read_snapshot, snapshot_bytes, write_snapshot

from oracles import fnv1a64_reference


@pytest.mark.parametrize(
    "data, digest",
    [(b"", 0xCBF29CE484222325), (b"a", 0xAF63DC4C8601EC8C), (b"foobar", 0x85944171F73967E8)],
)
def test_fnv1a64_known_vectors(data, digest):
    assert fnv1a64(data) == digest
    assert fnv1a64_reference(data) == digest


@given(st.binary(max_size=300), st.binary(max_size=300))
def test_fnv1a64_matches_reference_and_chains(a, b):
    assert fnv1a64(a + b) == fnv1a64(b, fnv1a64(a)) == fnv1a64_reference(a + b)


def test_round_trip_file(tmp_path, primorial):
    path = tmp_path / "30.pgc"
    write_snapshot(primorial(5), path)
    assert read_snapshot(path) == primorial(5)


def test_header_layout_is_bit_exact(primorial):
    blob = snapshot_bytes(primorial(5))
    assert blob[:4] == b"PGC1" and blob[4] == 1 and blob[5] == 1
    (count,) = struct.unpack_from("<H", blob, 6)
    assert count == 3
    factors = [struct.unpack_from("<QI", blob, 8 + 12 * i) for i in range(count)]
    assert factors == [(2, 1), (3, 1), (5, 1)]
    off = 8 + 12 * count
    phi, checksum = struct.unpack_from("<QQ", blob, off)
    assert phi == 8
    payload = blob[off + 16 :]
    assert list(payload) == [6, 4, 2, 4, 2, 4, 6, 2]
    assert checksum == fnv1a64_reference(blob[:off + 8] + payload)
    assert len(blob) == off + 16 + 8


def test_wide_gaps_pick_wider_width(primorial):
    # not a genuine cycle for 302, so reading it back must fail the totient check
    blob = snapshot_bytes(GapCycle.from_gaps([300, 2], 302))
    assert blob[5] == 2
    with pytest.raises(PhiMismatchError):
        read_snapshot(io.BytesIO(blob))
    blob = snapshot_bytes(primorial(13), width=2)
    assert blob[5] == 2
    assert read_snapshot(io.BytesIO(blob)) == primorial(13)


def test_explicit_wider_width(primorial):
    blob = snapshot_bytes(primorial(7), width=4)
    assert blob[5] == 4
    assert read_snapshot(io.BytesIO(blob)) == primorial(7)


def test_too_narrow_width_refused():
    with pytest.raises(BadHeaderError):
        snapshot_bytes(GapCycle.from_gaps([300, 2], 302), width=1)


def test_corrupt_payload_byte_is_checksum_error(primorial):
    blob = bytearray(snapshot_bytes(primorial(7)))
    blob[-5] ^= 0x02
    with pytest.raises(ChecksumError) as info:
        read_snapshot(io.BytesIO(bytes(blob)))
    assert info.value.code == "checksum"


def test_header_phi_nine_with_eight_gaps(primorial):
    c = primorial(5)
    header = SnapshotHeader(b"PGC1", 1, 1, c.modulus.factors, 9, 0)
    payload = c.gaps.tobytes()
    good = SnapshotHeader(b"PGC1", 1, 1, c.modulus.factors, 9, fnv1a64(payload, fnv1a64(header.prefix_bytes())))
    with pytest.raises(PhiMismatchError) as info:
        read_snapshot(io.BytesIO(good.to_bytes() + payload))
    assert info.value.code == "phi-mismatch"


def test_payload_shorter_than_phi(primorial):
    blob = snapshot_bytes(primorial(5))
    with pytest.raises(PhiMismatchError):
        read_snapshot(io.BytesIO(blob[:-1]))
    with pytest.raises(PhiMismatchError):
        read_snapshot(io.BytesIO(blob + b"\x02"))


def test_bad_magic_and_version(primorial):
    blob = snapshot_bytes(primorial(5))
    with pytest.raises(BadMagicError) as m:
        read_snapshot(io.BytesIO(b"XXXX" + blob[4:]))
    with pytest.raises(BadVersionError) as v:
        read_snapshot(io.BytesIO(blob[:4] + b"\x02" + blob[5:]))
    codes = {m.value.code, v.value.code, ChecksumError.code, PhiMismatchError.code}
    assert len(codes) == 4


def test_truncated_header():
    with pytest.raises(BadHeaderError):
        read_snapshot(io.BytesIO(b"PGC1\x01"))


def test_read_header_only(primorial):
    h = read_header(io.BytesIO(snapshot_bytes(primorial(7))))
    assert h.phi == 48 and h.factor_count == 4 and h.gap_width == 1


def test_read_guard(primorial):
    with pytest.raises(ResourceError):
        read_snapshot(io.BytesIO(snapshot_bytes(primorial(11))), limit=100)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 3, 5, 7, 11, 13]), st.integers(0, 10**6))
def test_any_single_byte_flip_is_detected(primorial, p, where):
    blob = bytearray(snapshot_bytes(primorial(p)))
    i = where % len(blob)
    blob[i] ^= 0x10
    with pytest.raises((ChecksumError, PhiMismatchError, BadMagicError, BadVersionError, BadHeaderError, ResourceError)):
        read_snapshot(io.BytesIO(bytes(blob)))
