"""The cycle of gaps among the generators of Z mod N.

A :class:`GapCycle` stores the gaps densely in the narrowest unsigned width
that holds them. Cycles grow one prime at a time with :func:`extend`, or are
streamed to a consumer with :func:`extend_streaming` when the result is too
large to keep resident.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, ResourceError, StreamAborted
from .numtheory import FactoredInteger, euler_phi, factorize, primes_up_to, require_prime

GapSink = Callable[[np.ndarray], object]

DEFAULT_CHUNK = 1 << 22
DEFAULT_GENERATOR_LIMIT = 10_000_000


def gap_dtype(max_gap: int) -> np.dtype:
    if max_gap <= 0xFF:
        return np.dtype("<u1")
    if max_gap <= 0xFFFF:
        return np.dtype("<u2")
    if max_gap <= 0xFFFFFFFF:
        return np.dtype("<u4")
    raise DomainError(f"gap {max_gap} does not fit in 4 bytes")


def narrow(gaps: np.ndarray) -> np.ndarray:
    """Cast a gap array to the smallest width holding its largest element."""
    if gaps.size == 0:
        return gaps.astype("<u1")
    dt = gap_dtype(int(gaps.max()))
    return gaps if gaps.dtype == dt else gaps.astype(dt)


@dataclass(frozen=True, eq=False)
class GapCycle:
    """Cyclic gap sequence for a factored modulus, first gap leaving generator 1.

    Construction performs shape checks only; use :func:`validate` for the
    structural invariants, so that malformed cycles can still be inspected.
    """

    modulus: FactoredInteger
    gaps: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.gaps)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("a gap cycle needs a non-empty 1-D gap sequence")
        if arr.dtype.kind not in "iu":
            raise DomainError(f"gaps must be integers, got dtype {arr.dtype}")
        if int(arr.min()) < 1:
            raise DomainError("gaps must be positive")
        arr = narrow(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "gaps", arr)

    @classmethod
    def from_gaps(cls, gaps: Sequence[int] | np.ndarray, modulus: int | FactoredInteger) -> "GapCycle":
        if not isinstance(modulus, FactoredInteger):
            modulus = factorize(int(modulus))
        return cls(modulus, np.asarray(gaps, dtype=np.int64))

    @property
    def N(self) -> int:
        return self.modulus.value

    @property
    def phi(self) -> int:
        return int(self.gaps.size)

    @property
    def width(self) -> int:
        return self.gaps.dtype.itemsize

    @property
    def max_gap(self) -> int:
        return int(self.gaps.max())

    def __len__(self) -> int:
        return self.phi

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GapCycle):
            return NotImplemented
        return self.modulus == other.modulus and np.array_equal(self.gaps, other.gaps)

    def __hash__(self) -> int:
        return hash((self.modulus, self.phi, self.gaps[:64].tobytes()))

    def tolist(self) -> list[int]:
        return self.gaps.tolist()

    def __repr__(self) -> str:
        head = " ".join(map(str, self.gaps[:12].tolist()))
        more = " ..." if self.phi > 12 else ""
        return f"GapCycle(N={self.modulus}, phi={self.phi}, gaps=[{head}{more}])"


def base_cycle(p: int) -> GapCycle:
    """Cycle for a prime modulus: ``p - 2`` ones followed by a 2."""
    p = require_prime(p, "base modulus")
    gaps = np.ones(p - 1, dtype=np.uint8)
    gaps[-1] = 2
    return GapCycle(FactoredInteger(p, ((p, 1),)), gaps)


def primorial_cycle(p: int, *, limit: int | None = None) -> GapCycle:
    """Build the cycle for ``p#`` by ascending prime extensions from 2."""
    primes = primes_up_to(p)
    cycle = base_cycle(2)
    for q in primes[1:]:
        cycle = extend(cycle, q, limit=limit)
    return cycle


@dataclass(frozen=True)
class StreamSummary:
    count: int
    total: int
    closures: int
    max_gap: int


class _Tally:
    def __init__(self) -> None:
        self.count = 0
        self.total = 0
        self.max_gap = 0

    def add(self, chunk: np.ndarray) -> None:
        if chunk.size:
            self.count += int(chunk.size)
            self.total += int(chunk.sum(dtype=np.int64))
            self.max_gap = max(self.max_gap, int(chunk.max()))

    def summary(self, closures: int) -> StreamSummary:
        return StreamSummary(self.count, self.total, closures, self.max_gap)


def _extension_chunks(
    cycle: GapCycle, q: int, chunk_size: int, audit: np.ndarray | None, progress: list
) -> Iterator[np.ndarray]:
    """Yield the gaps of the cycle for ``q * N`` in order; ``progress[0]`` tracks closures."""
    gaps = cycle.gaps
    if q in cycle.modulus:
        # every lift of a generator stays a generator: q plain copies
        for _ in range(q):
            for a in range(0, cycle.phi, chunk_size):
                yield gaps[a : a + chunk_size]
        return
    n = cycle.N
    if q * (n + 1) >= 2**63:
        raise ResourceError(f"{q}*{cycle.modulus} exceeds 64-bit candidate range")
    # copy, pos, value, acc, sched, target, closures; first closure lands on q itself
    state = np.array([0, 0, 1, 0, 0, q, 0], dtype=np.int64)
    use_audit = audit is not None
    audit_arr = audit if use_audit else np.zeros(1, dtype=np.int64)
    block = min(chunk_size, (q - 1) * cycle.phi)
    while state[_kernels.S_COPY] < q:
        out = np.empty(block, dtype=np.int64)
        k = _kernels.extend_block(gaps, np.int64(q), state, out, audit_arr, use_audit)
        progress[0] = int(state[_kernels.S_CLOSURES])
        if k:
            yield narrow(out[:k])


def _stream_extension(
    cycle: GapCycle,
    q: int,
    sink: GapSink,
    *,
    chunk_size: int = DEFAULT_CHUNK,
    audit: np.ndarray | None = None,
    handoff: int = 0,
) -> StreamSummary:
    q = require_prime(q, "extension prime")
    tally = _Tally()
    progress = [0]
    chunks = _extension_chunks(cycle, q, chunk_size, audit, progress)
    if handoff > 0:
        _feed_threaded(chunks, sink, tally, progress, handoff)
    else:
        for chunk in chunks:
            try:
                sink(chunk)
            except Exception as exc:
                raise StreamAborted(f"sink failed after {tally.count} gaps: {exc}", tally.summary(progress[0])) from exc
            tally.add(chunk)
    return tally.summary(progress[0])


def _feed_threaded(chunks: Iterable[np.ndarray], sink: GapSink, tally: _Tally, progress: list, depth: int) -> None:
    """Run ``sink`` on a consumer thread; the producer blocks once ``depth`` chunks are pending."""
    hand = queue.Queue(maxsize=depth)
    failure: list[BaseException] = []
    done = object()

    def consume() -> None:
        while True:
            item = hand.get()
            if item is done:
                return
            if failure:
                continue
            try:
                sink(item)
                tally.add(item)
            except BaseException as exc:  # surfaced on the producer side
                failure.append(exc)

    worker = threading.Thread(target=consume, daemon=True)
    worker.start()
    try:
        for chunk in chunks:
            if failure:
                break
            hand.put(chunk)
    finally:
        hand.put(done)
        worker.join()
    if failure:
        exc = failure[0]
        raise StreamAborted(f"sink failed after {tally.count} gaps: {exc}", tally.summary(progress[0])) from exc


def extend_streaming(
    cycle: GapCycle, q: int, sink: GapSink, *, chunk_size: int = DEFAULT_CHUNK, handoff: int = 0
) -> StreamSummary:
    """Emit the gaps of the cycle for ``q * N`` to ``sink`` in chunks, without keeping them.

    ``sink`` is called with successive numpy arrays; it must copy anything it
    wants to keep. With ``handoff > 0`` the sink runs on its own thread behind
    a queue of that depth. A failing sink raises :class:`StreamAborted`.
    """
    return _stream_extension(cycle, q, sink, chunk_size=chunk_size, handoff=handoff)


class CollectingSink:
    """Accumulates streamed chunks into a single array."""

    def __init__(self) -> None:
        self.chunks: list[np.ndarray] = []

    def __call__(self, chunk: np.ndarray) -> None:
        self.chunks.append(np.array(chunk, copy=True))

    def gaps(self) -> np.ndarray:
        if not self.chunks:
            return np.empty(0, dtype="<u1")
        dt = max((c.dtype for c in self.chunks), key=lambda d: d.itemsize)
        return np.concatenate([c.astype(dt, copy=False) for c in self.chunks])


class CountingSink:
    def __init__(self) -> None:
        self.count = 0

    def __call__(self, chunk: np.ndarray) -> None:
        self.count += int(chunk.size)


class MaxGapSink:
    def __init__(self) -> None:
        self.max_gap = 0

    def __call__(self, chunk: np.ndarray) -> None:
        if chunk.size:
            self.max_gap = max(self.max_gap, int(chunk.max()))


class FanoutSink:
    """Forward every chunk to several sinks in turn."""

    def __init__(self, *sinks: GapSink) -> None:
        self.sinks = sinks

    def __call__(self, chunk: np.ndarray) -> None:
        for s in self.sinks:
            s(chunk)


def extended_phi(cycle: GapCycle, q: int) -> int:
    return cycle.phi * (q if q in cycle.modulus else q - 1)


def extend(cycle: GapCycle, q: int, *, limit: int | None = None) -> GapCycle:
    """Return the cycle for ``q * N``.

    For ``q | N`` this is ``q`` copies of the input. Otherwise the ``q``
    copies are closed at ``q`` and then at ``q * gamma`` for every generator
    ``gamma``, found by stepping a running sum by ``q`` times each input gap.
    """
    q = require_prime(q, "extension prime")
    size = extended_phi(cycle, q)
    if limit is not None and size > limit:
        raise ResourceError(f"extending to {cycle.modulus}*{q} needs {size} resident gaps (limit {limit})")
    sink = CollectingSink()
    _stream_extension(cycle, q, sink)
    return GapCycle(cycle.modulus.times(q), sink.gaps())


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    first_violation: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            where = "" if c.first_violation is None else f" at index {c.first_violation}"
            lines.append(f"{mark} {c.name}{where} {c.detail}".rstrip())
        return "\n".join(lines)


def _first_true(mask: np.ndarray) -> int | None:
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def validate(cycle: GapCycle) -> ValidationReport:
    """Check length, sum, trailing 2, symmetry and the even-modulus minimum gap."""
    gaps = cycle.gaps
    phi = euler_phi(cycle.modulus)
    checks = [Check("length", cycle.phi == phi, None if cycle.phi == phi else min(cycle.phi, phi), f"phi(N)={phi}, got {cycle.phi}")]
    total = int(gaps.sum(dtype=np.int64))
    checks.append(Check("sum", total == cycle.N, None, f"N={cycle.N}, got {total}"))
    last = int(gaps[-1])
    checks.append(Check("final-gap", last == 2, None if last == 2 else cycle.phi - 1, f"final gap {last}"))
    body = gaps[:-1]
    bad = _first_true(body != body[::-1])
    checks.append(Check("symmetry", bad is None, bad))
    if cycle.N % 2 == 0:
        small = _first_true(gaps < 2)
        checks.append(Check("even-min-gap", small is None, small))
    return ValidationReport(tuple(checks))


def generators_of(cycle: GapCycle, *, limit: int = DEFAULT_GENERATOR_LIMIT) -> list[int]:
    """Ascending generators 1, 1 + g1, ... of Z mod N."""
    if cycle.phi > limit:
        raise ResourceError(f"{cycle.phi} generators exceed the limit {limit}")
    gens = np.empty(cycle.phi, dtype=np.int64)
    gens[0] = 1
    np.cumsum(cycle.gaps[:-1], dtype=np.int64, out=gens[1:])
    gens[1:] += 1
    return gens.tolist()
