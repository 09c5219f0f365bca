"""Binary ``.pgc`` snapshots of a gap cycle.

Layout, all integers little-endian::

    magic         4 bytes  b"PGC1"
    version       u8       1
    gap_width     u8       1, 2 or 4
    factor_count  u16
    factors       factor_count x (u64 prime, u32 exponent)
    phi           u64      number of gaps
    checksum      u64      FNV-1a-64 over every preceding header byte, then the payload
    payload       phi x gap_width bytes

The checksum is the last header field but covers the payload that follows it.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from typing import BinaryIO, Union

import numpy as np

from . import _kernels
from .errors import BadHeaderError, BadMagicError, BadVersionError, ChecksumError, PhiMismatchError, ResourceError
from .gapcycle import GapCycle, gap_dtype
from .numtheory import FactoredInteger, euler_phi

MAGIC = b"PGC1"
VERSION = 1
EXTENSION = ".pgc"
WIDTHS = (1, 2, 4)

_PREFIX = struct.Struct("<4sBBH")
_FACTOR = struct.Struct("<QI")
_U64 = struct.Struct("<Q")

PathOrFile = Union[str, os.PathLike, BinaryIO]

_READ_BLOCK = 1 << 24


def fnv1a64(data: bytes | np.ndarray, h: int = int(_kernels.FNV_OFFSET)) -> int:
    """FNV-1a 64-bit hash of ``data``, continuing from state ``h``."""
    arr = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray, memoryview)) else data.view(np.uint8).ravel()
    return int(_kernels.fnv1a64(arr, np.uint64(h)))


@dataclass(frozen=True)
class SnapshotHeader:
    magic: bytes
    version: int
    gap_width: int
    factors: tuple[tuple[int, int], ...]
    phi: int
    checksum: int

    @property
    def factor_count(self) -> int:
        return len(self.factors)

    @property
    def size(self) -> int:
        return _PREFIX.size + _FACTOR.size * len(self.factors) + 2 * _U64.size

    def prefix_bytes(self) -> bytes:
        """Header bytes covered by the checksum (everything before it)."""
        parts = [_PREFIX.pack(self.magic, self.version, self.gap_width, len(self.factors))]
        parts += [_FACTOR.pack(p, e) for p, e in self.factors]
        parts.append(_U64.pack(self.phi))
        return b"".join(parts)

    def to_bytes(self) -> bytes:
        return self.prefix_bytes() + _U64.pack(self.checksum)


def _payload(cycle: GapCycle, width: int) -> np.ndarray:
    return np.ascontiguousarray(cycle.gaps.astype({1: "<u1", 2: "<u2", 4: "<u4"}[width], copy=False))


def encode_header(cycle: GapCycle, width: int | None = None) -> tuple[SnapshotHeader, np.ndarray]:
    width = width or gap_dtype(cycle.max_gap).itemsize
    if width not in WIDTHS or width < gap_dtype(cycle.max_gap).itemsize:
        raise BadHeaderError(f"gap width {width} cannot hold max gap {cycle.max_gap}")
    payload = _payload(cycle, width)
    draft = SnapshotHeader(MAGIC, VERSION, width, cycle.modulus.factors, cycle.phi, 0)
    checksum = fnv1a64(payload, fnv1a64(draft.prefix_bytes()))
    return SnapshotHeader(MAGIC, VERSION, width, cycle.modulus.factors, cycle.phi, checksum), payload


def write_snapshot(cycle: GapCycle, destination: PathOrFile, *, width: int | None = None) -> SnapshotHeader:
    header, payload = encode_header(cycle, width)
    if hasattr(destination, "write"):
        destination.write(header.to_bytes())
        destination.write(payload.tobytes())
    else:
        with open(destination, "wb") as fh:
            fh.write(header.to_bytes())
            payload.tofile(fh)
    return header


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise BadHeaderError(f"truncated {what}: wanted {n} bytes, got {len(data)}")
    return data


def read_header(fh: BinaryIO) -> SnapshotHeader:
    magic, version, width, count = _PREFIX.unpack(_read_exact(fh, _PREFIX.size, "header"))
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version}")
    if width not in WIDTHS:
        raise BadHeaderError(f"gap width {width} not in {WIDTHS}")
    factors = tuple(_FACTOR.unpack(_read_exact(fh, _FACTOR.size, "factor")) for _ in range(count))
    (phi,) = _U64.unpack(_read_exact(fh, 8, "phi"))
    (checksum,) = _U64.unpack(_read_exact(fh, 8, "checksum"))
    return SnapshotHeader(magic, version, width, factors, phi, checksum)


def _open(source: PathOrFile):
    if hasattr(source, "read"):
        return source, False
    return open(source, "rb"), True


def read_snapshot(source: PathOrFile, *, limit: int | None = None) -> GapCycle:
    """Load and verify a snapshot; raise a :class:`SnapshotError` subclass on any defect."""
    fh, owned = _open(source)
    try:
        header = read_header(fh)
        bits = sum(e * (p.bit_length() - 1) for p, e in header.factors)
        if bits >= 64:
            raise BadHeaderError("modulus does not fit in 64 bits")
        try:
            modulus = FactoredInteger.from_factors(header.factors)
        except ValueError as exc:
            raise BadHeaderError(f"invalid factor list: {exc}") from exc
        if modulus.factors != header.factors:
            raise BadHeaderError("factors not strictly ascending")
        expected = euler_phi(modulus)
        if header.phi != expected:
            raise PhiMismatchError(f"header phi {header.phi} but phi({modulus}) = {expected}")
        if limit is not None and header.phi > limit:
            raise ResourceError(f"snapshot holds {header.phi} gaps (limit {limit})")
        dt = {1: "<u1", 2: "<u2", 4: "<u4"}[header.gap_width]
        gaps = np.empty(header.phi, dtype=dt)
        raw = gaps.view(np.uint8)
        got = 0
        while got < raw.size:
            n = fh.readinto(memoryview(raw[got : got + _READ_BLOCK]))
            if not n:
                break
            got += n
        if got != raw.size or fh.read(1):
            raise PhiMismatchError(f"payload size does not match header phi {header.phi} x width {header.gap_width}")
        checksum = fnv1a64(raw, fnv1a64(header.prefix_bytes()))
        if checksum != header.checksum:
            raise ChecksumError(f"checksum {checksum:#018x} != stored {header.checksum:#018x}")
    finally:
        if owned:
            fh.close()
    return GapCycle(modulus, gaps)


def snapshot_bytes(cycle: GapCycle, width: int | None = None) -> bytes:
    buf = io.BytesIO()
    write_snapshot(cycle, buf, width=width)
    return buf.getvalue()
