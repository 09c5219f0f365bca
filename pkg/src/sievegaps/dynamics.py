"""Stage-to-stage evolution of driving-term counts and their ratios to the twins.

Between consecutive primorial stages ``p -> p'``, a complete row for a gap
``g < 2 p'`` evolves as

    n[g, j](p') = (p' - j - 1) * n[g, j](p) + j * n[g, j + 1](p)

and dividing by the twin count ``n[2, 1]`` gives the ratio recursion. The sum
over ``j`` of the ratios is invariant, which is its limiting value.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .census import DrivingTermTable, census, stream_census
from .errors import DomainError, PreconditionError, ResourceError
from .gapcycle import GapCycle, extend, extended_phi, primorial_cycle
from .numtheory import (
    FactoredInteger,
    euler_phi,
    factorize,
    format_decimal,
    hl_ratio,
    is_prime,
    next_prime,
    odd_prime_factors,
    primes_up_to,
    radical,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DroppedRow:
    gap: int
    stage: int
    reason: str


def _stage_of(table_modulus: FactoredInteger) -> int:
    p = table_modulus.largest_prime
    if p is None:
        raise DomainError("table has no stage prime")
    return p


def _successor(p: int, p_next: int) -> None:
    if not is_prime(p_next) or next_prime(p) != p_next:
        raise DomainError(f"{p_next} is not the prime after {p}")


def _surviving_rows(gaps, complete, p_next: int, dropped: list[DroppedRow]) -> list[int]:
    keep = []
    for g in gaps:
        if g >= 2 * p_next:
            dropped.append(DroppedRow(g, p_next, f"{g} >= 2*{p_next}"))
        elif g not in complete:
            raise PreconditionError(f"row g={g} is incomplete: raise j_max to at least {g // 2}")
        else:
            keep.append(g)
    return keep


@dataclass
class AdvancedCounts:
    table: DrivingTermTable
    dropped: list[DroppedRow] = field(default_factory=list)


def advance_counts(table: DrivingTermTable, p_next: int, *, rows=None) -> AdvancedCounts:
    """Apply one stage of the count recursion to every eligible row of ``table``.

    Rows with ``g >= 2 * p_next`` are dropped and reported. ``rows`` limits the
    gaps considered (default: every even ``g <= g_max``).
    """
    p = _stage_of(table.modulus)
    _successor(p, p_next)
    candidates = rows if rows is not None else range(2, table.g_max + 1, 2)
    dropped: list[DroppedRow] = []
    keep = _surviving_rows(candidates, table.complete_gaps, p_next, dropped)
    counts: dict[int, dict[int, int]] = {}
    for g in keep:
        old = table.counts.get(g, {})
        new = {}
        for j in range(1, table.j_max + 1):
            n = (p_next - j - 1) * old.get(j, 0) + j * old.get(j + 1, 0)
            if n:
                new[j] = n
        if new:
            counts[g] = new
    advanced = DrivingTermTable(
        table.modulus.times(p_next), table.g_max, table.j_max, counts, frozenset(keep), table.min_gap
    )
    return AdvancedCounts(advanced, dropped)


def advance_to(table: DrivingTermTable, p_target: int) -> tuple[list[DrivingTermTable], list[DroppedRow]]:
    """Advance stage by stage up to ``p_target``; returns every stage including the first."""
    stages = [table]
    dropped: list[DroppedRow] = []
    rows = None
    p = _stage_of(table.modulus)
    if p_target < p:
        raise DomainError(f"cannot advance backwards from {p} to {p_target}")
    while p < p_target:
        p = next_prime(p)
        step = advance_counts(stages[-1], p, rows=rows)
        rows = sorted(step.table.complete_gaps)
        stages.append(step.table)
        dropped.extend(step.dropped)
    return stages, dropped


@dataclass
class RatioTable:
    """Exact ratios ``n[g, j] / n[2, 1]`` at one primorial stage."""

    stage: int
    ratios: dict[int, dict[int, Fraction]]
    j_max: int
    complete_gaps: frozenset[int] = frozenset()

    def row(self, g: int) -> dict[int, Fraction]:
        return dict(sorted(self.ratios.get(g, {}).items()))

    def ratio_sum(self, g: int) -> Fraction:
        return sum(self.ratios.get(g, {}).values(), Fraction(0))

    @classmethod
    def from_counts(cls, table: DrivingTermTable) -> "RatioTable":
        twins = table.twins
        if twins <= 0:
            raise PreconditionError("table has no gaps of 2 to normalize by")
        ratios = {g: {j: Fraction(n, twins) for j, n in row.items()} for g, row in table.counts.items()}
        return cls(_stage_of(table.modulus), ratios, table.j_max, frozenset(table.complete_gaps))


@dataclass
class AdvancedRatios:
    table: RatioTable
    dropped: list[DroppedRow] = field(default_factory=list)


def ratio_advance(ratios: RatioTable, p_next: int, *, rows=None) -> AdvancedRatios:
    _successor(ratios.stage, p_next)
    candidates = rows if rows is not None else sorted(g for g in ratios.complete_gaps if g % 2 == 0)
    dropped: list[DroppedRow] = []
    keep = _surviving_rows(candidates, ratios.complete_gaps, p_next, dropped)
    scale = p_next - 2
    out: dict[int, dict[int, Fraction]] = {}
    for g in keep:
        old = ratios.ratios.get(g, {})
        new = {}
        for j in range(1, ratios.j_max + 1):
            r = Fraction(p_next - j - 1, scale) * old.get(j, 0) + Fraction(j, scale) * old.get(j + 1, 0)
            if r:
                new[j] = r
        if new:
            out[g] = new
    return AdvancedRatios(RatioTable(p_next, out, ratios.j_max, frozenset(keep)), dropped)


def ratio_sum(table: DrivingTermTable, g: int) -> Fraction:
    """Sum over lengths of ``n[g, j] / n[2, 1]`` straight from a census."""
    if table.twins <= 0:
        raise PreconditionError("table has no gaps of 2 to normalize by")
    return Fraction(table.total(g), table.twins)


def asymptotic_from_table(table: DrivingTermTable, g: int) -> Fraction:
    """Limiting ratio of gaps ``g`` to gaps 2 from a stage where the recursion already applies."""
    p = _stage_of(table.modulus)
    if g >= 2 * next_prime(p):
        raise PreconditionError(f"g={g} needs g < 2*{next_prime(p)}")
    if g not in table.complete_gaps:
        raise PreconditionError(f"row g={g} is incomplete")
    return ratio_sum(table, g)


def stage_ratio_sum(g: int, p: int) -> Fraction:
    """Closed form for the ratio sum of ``g`` at stage ``p#``: only odd prime factors ``<= p`` count."""
    if g < 2 or g % 2:
        raise DomainError(f"gap must be a positive even integer, got {g}")
    if p < 3:
        raise DomainError(f"stage prime must be >= 3, got {p}")
    r = Fraction(1)
    for q in odd_prime_factors(g):
        if q <= p:
            r *= Fraction(q - 1, q - 2)
    return r


def total_driving_terms(g: int) -> tuple[int, int]:
    """Largest prime factor ``qbar`` of ``g`` and the driving-term total for ``g`` in the cycle for ``qbar#``."""
    if g < 2 or g % 2:
        raise DomainError(f"gap must be a positive even integer, got {g}")
    core = radical(g)
    qbar = factorize(g).largest_prime
    fill = math.prod(p - 2 for p in primes_up_to(qbar) if p < qbar and core % p)
    return qbar, euler_phi(core) * fill


@dataclass(frozen=True)
class Mismatch:
    stage: int
    gap: int
    length: int
    predicted: int
    constructed: int


@dataclass
class DiscrepancyReport:
    p_start: int
    p_end: int
    g_max: int
    j_max: int
    stages: list[int] = field(default_factory=list)
    cells_checked: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)
    dropped: list[DroppedRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def excluded_gaps(self) -> list[int]:
        return sorted({d.gap for d in self.dropped})


def predict_vs_construct(
    p_start: int, p_end: int, g_max: int, j_max: int, *, stage_limit: int = 100_000_000, start: GapCycle | None = None
) -> DiscrepancyReport:
    """Advance a census by the recursion and compare with a fresh census at every stage.

    Stages within ``stage_limit`` gaps are materialized; the last may be
    streamed if it alone is too big to keep.
    """
    cycle = start if start is not None else primorial_cycle(p_start, limit=stage_limit)
    if cycle.modulus != FactoredInteger.from_factors((q, 1) for q in primes_up_to(p_start)):
        raise DomainError(f"start cycle must be for {p_start}#")
    report = DiscrepancyReport(p_start, p_end, g_max, j_max)
    predicted = census(cycle, g_max, j_max)
    rows = None
    p = p_start
    while p < p_end:
        p = next_prime(p)
        step = advance_counts(predicted, p, rows=rows)
        predicted = step.table
        rows = sorted(predicted.complete_gaps)
        report.dropped.extend(step.dropped)
        size = extended_phi(cycle, p)
        if size <= stage_limit:
            cycle = extend(cycle, p)
            built = census(cycle, g_max, j_max)
        elif p == p_end:
            built = stream_census(cycle, p, g_max, j_max)
        else:
            raise ResourceError(f"stage {p}# has {size} gaps, over the limit {stage_limit}")
        report.stages.append(p)
        for g in rows:
            for j in range(1, j_max + 1):
                a, b = predicted.count(g, j), built.count(g, j)
                report.cells_checked += 1
                if a != b:
                    report.mismatches.append(Mismatch(p, g, j, a, b))
        log.info("stage %d: %d rows compared, %d mismatches", p, len(rows), len(report.mismatches))
    return report


TRAJECTORY_COUNT_HEADER = ("stage_prime", "gap", "length", "count")
TRAJECTORY_RATIO_HEADER = ("stage_prime", "gap", "ratio_sum_exact", "ratio_sum_decimal")


def trajectory_counts_csv(stages: list[DrivingTermTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COUNT_HEADER)
    for t in stages:
        rows = sorted(g for g in t.complete_gaps if g % 2 == 0)
        for g in rows:
            for j, n in t.row(g).items():
                w.writerow((t.stage, g, j, n))
    return buf.getvalue()


def trajectory_ratio_rows(stages: list[DrivingTermTable], places: int = 4):
    for t in stages:
        for g in sorted(g for g in t.complete_gaps if g % 2 == 0):
            s = ratio_sum(t, g)
            yield t.stage, g, s, format_decimal(s, places)


def trajectory_ratios_csv(stages: list[DrivingTermTable], places: int = 4) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_RATIO_HEADER)
    for stage, g, s, dec in trajectory_ratio_rows(stages, places):
        w.writerow((stage, g, str(s), dec))
    return buf.getvalue()


def trajectory_json_obj(stages: list[DrivingTermTable], dropped: list[DroppedRow], places: int = 4) -> dict:
    out = []
    for t in stages:
        rows = []
        for g in sorted(g for g in t.complete_gaps if g % 2 == 0):
            s = ratio_sum(t, g)
            hl = hl_ratio(g)
            closed = stage_ratio_sum(g, t.stage) if t.stage and t.stage >= 3 else None
            rows.append({
                "gap": g,
                "counts": {str(j): n for j, n in t.row(g).items()},
                "ratio_sum_exact": str(s),
                "ratio_sum_decimal": format_decimal(s, places),
                "hl_ratio_exact": str(hl),
                "hl_ratio_decimal": format_decimal(hl, places),
                "stage_ratio_sum_exact": None if closed is None else str(closed),
                "stage_ratio_sum_decimal": None if closed is None else format_decimal(closed, places),
                "matches_hl": s == hl,
            })
        out.append({"stage_prime": t.stage, "twins": t.twins, "rows": rows})
    return {"stages": out, "dropped": [{"gap": d.gap, "stage": d.stage, "reason": d.reason} for d in dropped]}
