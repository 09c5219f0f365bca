"""Driving-term censuses, maximal gaps, and closure audits over gap cycles.

A window of consecutive gaps is read cyclically, so windows may run past the
end of the cycle (and around it more than once when the target sum exceeds
the modulus).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .errors import DomainError, PreconditionError, ResourceError, StreamAborted, TruncatedStreamError
from .gapcycle import GapCycle, _stream_extension, base_cycle, extend, extended_phi
from .numtheory import FactoredInteger, euler_phi, primes_up_to, require_prime

DEFAULT_STAGE_LIMIT = 1_100_000_000
CSV_HEADER = ("gap", "length", "count")


@dataclass
class DrivingTermTable:
    """Exact counts ``counts[g][j]`` of length-``j`` windows summing to ``g``.

    Only nonzero cells are stored. ``complete_gaps`` holds every ``g`` whose
    windows are all no longer than ``j_max``.
    """

    modulus: FactoredInteger
    g_max: int
    j_max: int
    counts: dict[int, dict[int, int]] = field(default_factory=dict)
    complete_gaps: frozenset[int] = frozenset()
    min_gap: int = 2

    @property
    def stage(self) -> int | None:
        return self.modulus.largest_prime

    def count(self, g: int, j: int) -> int:
        return self.counts.get(g, {}).get(j, 0)

    def row(self, g: int) -> dict[int, int]:
        return dict(sorted(self.counts.get(g, {}).items()))

    def total(self, g: int) -> int:
        return sum(self.counts.get(g, {}).values())

    @property
    def twins(self) -> int:
        return self.count(2, 1)

    def is_complete(self, g: int) -> bool:
        return g in self.complete_gaps

    def cells(self) -> Iterable[tuple[int, int, int]]:
        for g in sorted(self.counts):
            for j in sorted(self.counts[g]):
                yield g, j, self.counts[g][j]

    def merge(self, other: "DrivingTermTable") -> "DrivingTermTable":
        """Cellwise sum of censuses over disjoint start ranges of one cycle."""
        if (self.modulus, self.g_max, self.j_max) != (other.modulus, other.g_max, other.j_max):
            raise DomainError("can only merge tables with equal modulus, g_max and j_max")
        counts = {g: dict(r) for g, r in self.counts.items()}
        for g, j, n in other.cells():
            row = counts.setdefault(g, {})
            row[j] = row.get(j, 0) + n
        return DrivingTermTable(
            self.modulus, self.g_max, self.j_max, counts, self.complete_gaps & other.complete_gaps, min(self.min_gap, other.min_gap)
        )

    def to_json_obj(self) -> dict:
        return {
            "modulus": {"value": self.modulus.value, "factors": [list(f) for f in self.modulus.factors]},
            "g_max": self.g_max,
            "j_max": self.j_max,
            "min_gap": self.min_gap,
            "complete_gaps": sorted(self.complete_gaps),
            "counts": {str(g): {str(j): n for j, n in sorted(r.items())} for g, r in sorted(self.counts.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2) + "\n"

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "DrivingTermTable":
        modulus = FactoredInteger.from_factors(tuple(f) for f in obj["modulus"]["factors"])
        counts = {int(g): {int(j): int(n) for j, n in r.items() if int(n)} for g, r in obj["counts"].items()}
        return cls(
            modulus, int(obj["g_max"]), int(obj["j_max"]), {g: r for g, r in counts.items() if r},
            frozenset(int(g) for g in obj["complete_gaps"]), int(obj.get("min_gap", 2)),
        )

    @classmethod
    def from_json(cls, text: str) -> "DrivingTermTable":
        return cls.from_json_obj(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        factors = " ".join(f"{p}^{e}" for p, e in self.modulus.factors)
        buf.write(f"# modulus: {factors}\n# g_max: {self.g_max}\n# j_max: {self.j_max}\n# min_gap: {self.min_gap}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(self.cells())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DrivingTermTable":
        meta: dict[str, str] = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            elif line.strip():
                body.append(line)
        rows = csv.reader(body)
        if tuple(next(rows)) != CSV_HEADER:
            raise DomainError("table CSV must start with gap,length,count")
        counts: dict[int, dict[int, int]] = {}
        for g, j, n in rows:
            counts.setdefault(int(g), {})[int(j)] = int(n)
        factors = [tuple(map(int, f.split("^"))) for f in meta["modulus"].split()]
        g_max, j_max, min_gap = int(meta["g_max"]), int(meta["j_max"]), int(meta.get("min_gap", 2))
        return cls(FactoredInteger.from_factors(factors), g_max, j_max, counts, complete_set(g_max, j_max, min_gap), min_gap)


def complete_set(g_max: int, j_max: int, min_gap: int) -> frozenset[int]:
    return frozenset(g for g in range(1, g_max + 1) if g <= j_max * min_gap)


def _check_bounds(g_max: int, j_max: int) -> None:
    if g_max < 1 or j_max < 1:
        raise DomainError(f"need g_max >= 1 and j_max >= 1, got {g_max}, {j_max}")


def _to_table(modulus, g_max, j_max, grid: np.ndarray, min_gap: int) -> DrivingTermTable:
    counts: dict[int, dict[int, int]] = {}
    for g, j in zip(*np.nonzero(grid)):
        counts.setdefault(int(g), {})[int(j)] = int(grid[g, j])
    counts = {g: dict(sorted(r.items())) for g, r in sorted(counts.items())}
    return DrivingTermTable(modulus, g_max, j_max, counts, complete_set(g_max, j_max, min_gap), min_gap)


def _cyclic_prefix(gaps: np.ndarray, n: int) -> np.ndarray:
    """The first ``n`` gaps of the cycle read repeatedly."""
    if n <= gaps.size:
        return gaps[:n]
    return np.resize(gaps, n)


def census(cycle: GapCycle, g_max: int, j_max: int, *, chunk_size: int = 1 << 22) -> DrivingTermTable:
    """Count every cyclic window of length ``<= j_max`` and sum ``<= g_max``."""
    _check_bounds(g_max, j_max)
    gaps = cycle.gaps
    min_gap = int(gaps.min())
    lmax = min(j_max, g_max // min_gap)
    grid = np.zeros((g_max + 1, max(lmax, 0) + 1), dtype=np.int64)
    if lmax >= 1:
        phi = cycle.phi
        overlap = lmax - 1
        body = max(0, phi - overlap)
        for a in range(0, body, chunk_size):
            n = min(chunk_size, body - a)
            _kernels.window_counts(gaps[a : a + n + overlap], n, lmax, g_max, grid)
        seam = np.concatenate([gaps[body:], _cyclic_prefix(gaps, overlap)])
        _kernels.window_counts(seam, phi - body, lmax, g_max, grid)
    return _to_table(cycle.modulus, g_max, j_max, grid, min_gap)


class StreamingCensus:
    """Gap consumer that builds the same table as :func:`census` in one pass.

    Feed it the cycle's gaps in order (any chunking), then call
    :meth:`finish`. The first few gaps are buffered to close the seam where
    windows wrap past the end of the cycle.
    """

    def __init__(self, g_max: int, j_max: int, *, modulus: FactoredInteger | None = None, expected_count: int | None = None):
        _check_bounds(g_max, j_max)
        self.g_max = g_max
        self.j_max = j_max
        self.modulus = modulus
        if expected_count is None and modulus is not None:
            expected_count = euler_phi(modulus)
        self.expected_count = expected_count
        cap = g_max // 2 if modulus is not None and modulus.value % 2 == 0 else g_max
        self.lmax = min(j_max, cap)
        self.overlap = self.lmax - 1
        self.grid = np.zeros((g_max + 1, self.lmax + 1), dtype=np.int64)
        self.head = np.empty(0, dtype=np.int64)
        self.pending = np.empty(0, dtype=np.int64)
        self.count = 0
        self.min_gap: int | None = None

    def __call__(self, chunk: np.ndarray) -> None:
        chunk = np.asarray(chunk)
        if chunk.size == 0:
            return
        self.count += int(chunk.size)
        lo = int(chunk.min())
        self.min_gap = lo if self.min_gap is None else min(self.min_gap, lo)
        if self.head.size < self.overlap:
            need = self.overlap - self.head.size
            self.head = np.concatenate([self.head, chunk[:need].astype(np.int64)])
        buf = np.concatenate([self.pending, chunk.astype(np.int64, copy=False)]) if self.pending.size else chunk
        ready = buf.size - self.overlap
        if ready > 0:
            _kernels.window_counts(buf, ready, self.lmax, self.g_max, self.grid)
            self.pending = np.array(buf[ready:], dtype=np.int64)
        else:
            self.pending = np.array(buf, dtype=np.int64)

    feed = __call__

    def finish(self) -> DrivingTermTable:
        if self.count == 0:
            raise TruncatedStreamError("empty gap stream")
        if self.expected_count is not None and self.count != self.expected_count:
            raise TruncatedStreamError(f"stream carried {self.count} gaps, expected {self.expected_count}")
        if self.lmax >= 1:
            seam = np.concatenate([self.pending, _cyclic_prefix(self.head, self.overlap)])
            _kernels.window_counts(seam, self.pending.size, self.lmax, self.g_max, self.grid)
        modulus = self.modulus
        if modulus is None:
            raise PreconditionError("streaming census needs the modulus to label its table")
        return _to_table(modulus, self.g_max, self.j_max, self.grid, self.min_gap)


def streaming_census_sink(g_max: int, j_max: int, *, modulus: FactoredInteger | None = None, expected_count: int | None = None) -> StreamingCensus:
    return StreamingCensus(g_max, j_max, modulus=modulus, expected_count=expected_count)


def stream_census(cycle: GapCycle, q: int, g_max: int, j_max: int) -> DrivingTermTable:
    """Census of the cycle for ``q * N`` streamed straight out of the extension."""
    sink = StreamingCensus(g_max, j_max, modulus=cycle.modulus.times(q))
    _stream_extension(cycle, q, sink)
    return sink.finish()


def max_gap(source: GapCycle | np.ndarray | Iterable[np.ndarray]) -> int:
    """Largest gap of a cycle, a gap array, or a stream of gap chunks."""
    if isinstance(source, GapCycle):
        return source.max_gap
    if isinstance(source, np.ndarray):
        return int(source.max())
    best = 0
    for chunk in source:
        best = max(best, int(np.max(chunk)))
    if best == 0:
        raise TruncatedStreamError("empty gap stream")
    return best


@dataclass(frozen=True)
class ClosureAudit:
    modulus: FactoredInteger
    q: int
    removals: np.ndarray = field(repr=False)
    closures: int

    @property
    def passed(self) -> bool:
        return bool((self.removals == 1).all())

    @property
    def positions(self) -> int:
        return int(self.removals.size)

    def violations(self) -> list[int]:
        return np.flatnonzero(self.removals != 1).tolist()


def closure_audit(cycle: GapCycle, q: int) -> ClosureAudit:
    """Count, per generator of Z mod N, how many of its ``q`` lifts the extension removes."""
    q = require_prime(q, "extension prime")
    if q in cycle.modulus:
        raise DomainError(f"{q} divides {cycle.modulus}: no closures to audit")
    removals = np.zeros(cycle.phi, dtype=np.int64)
    summary = _stream_extension(cycle, q, lambda chunk: None, audit=removals)
    return ClosureAudit(cycle.modulus, q, removals, summary.closures)


class _Found(Exception):
    pass


def first_occurrence_stage(g: int, p_limit: int, *, stage_limit: int = DEFAULT_STAGE_LIMIT) -> int | None:
    """Smallest prime ``p <= p_limit`` with ``g`` as a gap of the cycle for ``p#``.

    Stages are materialized while they fit ``stage_limit`` gaps; one further
    stage may be streamed. Returns ``None`` when ``g`` never shows up.
    """
    if g < 1:
        raise DomainError(f"gap must be positive, got {g}")
    cycle = base_cycle(2)
    if (cycle.gaps == g).any():
        return 2
    for p in primes_up_to(p_limit)[1:]:
        if extended_phi(cycle, p) <= stage_limit:
            cycle = extend(cycle, p)
            if g <= cycle.max_gap and (cycle.gaps == g).any():
                return p
            continue

        def probe(chunk: np.ndarray) -> None:
            if (chunk == g).any():
                raise _Found

        try:
            _stream_extension(cycle, p, probe)
        except StreamAborted as exc:
            if isinstance(exc.__cause__, _Found):
                return p
            raise
        raise ResourceError(f"gap {g} absent through {p}#; the next stage exceeds the limit of {stage_limit} gaps")
    return None
