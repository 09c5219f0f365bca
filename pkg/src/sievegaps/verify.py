"""Invariant suites run by ``sievegaps verify``."""

from __future__ import annotations

import io
import time
from dataclasses import dataclass
from typing import Callable

from . import reference
from .census import census, closure_audit, stream_census
from .dynamics import predict_vs_construct, ratio_sum, stage_ratio_sum, total_driving_terms
from .errors import SieveGapsError
from .gapcycle import GapCycle, base_cycle, extend, primorial_cycle, validate
from .numtheory import hl_ratio, primes_up_to, previous_prime
from .snapshot import read_snapshot, snapshot_bytes


@dataclass(frozen=True)
class Outcome:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.2f}s)"


class _Cache:
    def __init__(self) -> None:
        self.cycles: dict[int, GapCycle] = {}

    def primorial(self, p: int) -> GapCycle:
        if p not in self.cycles:
            prev = previous_prime(p)
            self.cycles[p] = base_cycle(2) if p == 2 else extend(self.primorial(prev), p)
        return self.cycles[p]


def check_base_cycle(c: _Cache) -> tuple[bool, str]:
    got = c.primorial(5).tolist()
    return got == [6, 4, 2, 4, 2, 4, 6, 2], " ".join(map(str, got))


def check_cycle_validity(c: _Cache) -> tuple[bool, str]:
    bad = [p for p in primes_up_to(17) if not validate(c.primorial(p)).ok]
    return not bad, "2#..17# valid" if not bad else f"invalid at {bad}"


def check_closure_audits(c: _Cache) -> tuple[bool, str]:
    cases = [(3, 5), (5, 7), (5, 11), (7, 11), (7, 13)]
    failed = []
    for p, q in cases:
        a = closure_audit(c.primorial(p), q)
        if not a.passed or a.closures != a.positions:
            failed.append((a.modulus.value, q))
    return not failed, f"{len(cases)} audits" if not failed else f"failed {failed}"


def check_qn_identities(c: _Cache) -> tuple[bool, str]:
    small, big = c.primorial(5), c.primorial(7)
    t30, t210 = census(small, 12, 6), census(big, 12, 6)
    ok = all(t210.total(g) == 5 * t30.total(g) for g in (6, 10, 12))
    t90 = census(extend(small, 3), 6, 3)
    ok &= all(t90.count(6, j) == 3 * t30.count(6, j) for j in range(1, 4))
    return ok, "sum scaling (q-2) and q|N tripling"


def check_table_13(c: _Cache) -> tuple[bool, str]:
    t = census(c.primorial(13), 32, 16)
    cells = reference.table_13_cells()
    wrong = [(g, j) for (g, j), n in cells.items() if t.count(g, j) != n]
    extra = [(g, j) for g, j, _ in t.cells() if (g, j) not in cells]
    hl_bad = [g for g in range(2, 33, 2) if ratio_sum(t, g) != hl_ratio(g)]
    ok = not wrong and not extra and not hl_bad
    return ok, f"{len(cells)} cells" if ok else f"wrong {wrong} extra {extra} hl {hl_bad}"


def check_recursion(c: _Cache) -> tuple[bool, str]:
    r = predict_vs_construct(13, 19, 32, 16, start=c.primorial(13))
    return r.ok, f"{r.cells_checked} cells, {len(r.mismatches)} mismatches"


def check_qlem_totals(c: _Cache) -> tuple[bool, str]:
    bad = []
    for g in (6, 10, 12, 20, 30):
        qbar, total = total_driving_terms(g)
        prev = previous_prime(qbar)
        streamed = stream_census(c.primorial(prev), qbar, g, g // 2)
        if streamed.total(g) != total:
            bad.append(g)
    return not bad, "g in 6,10,12,20,30" if not bad else f"mismatch for {bad}"


def check_ratio_222(c: _Cache) -> tuple[bool, str]:
    t = census(c.primorial(13), 222, 111)
    ok = ratio_sum(t, 222) == 2 == stage_ratio_sum(222, 13) == stage_ratio_sum(222, 31)
    ok &= stage_ratio_sum(222, 37) == hl_ratio(222)
    return ok, f"census sum {ratio_sum(t, 222)}, limit {stage_ratio_sum(222, 37)}"


def check_snapshot(c: _Cache) -> tuple[bool, str]:
    cycle = c.primorial(7)
    blob = snapshot_bytes(cycle)
    ok = read_snapshot(io.BytesIO(blob)) == cycle
    tampered = bytearray(blob)
    tampered[-3] ^= 0x01
    try:
        read_snapshot(io.BytesIO(bytes(tampered)))
        ok = False
    except SieveGapsError as exc:
        ok &= getattr(exc, "code", "") == "checksum"
    return ok, "round trip and tamper detection"


def check_max_gaps(c: _Cache) -> tuple[bool, str]:
    got = {p: c.primorial(p).max_gap for p in primes_up_to(23) if p > 2}
    want = {p: reference.MAX_GAP[p] for p in got}
    return got == want, " ".join(f"{p}:{g}" for p, g in got.items())


def check_twice_previous(c: _Cache) -> tuple[bool, str]:
    missing = [p for p in primes_up_to(23) if p > 3 and not (c.primorial(p).gaps == 2 * previous_prime(p)).any()]
    return not missing, "2*p_(k-1) present through 23#" if not missing else f"missing at {missing}"


QUICK: list[tuple[str, Callable[[_Cache], tuple[bool, str]]]] = [
    ("base-cycle", check_base_cycle),
    ("cycle-validity", check_cycle_validity),
    ("closure-audits", check_closure_audits),
    ("qn-identities", check_qn_identities),
    ("table-13", check_table_13),
    ("recursion-13-19", check_recursion),
    ("qlem-totals", check_qlem_totals),
    ("ratio-sum-222", check_ratio_222),
    ("snapshot", check_snapshot),
]
FULL = QUICK + [("max-gaps-23", check_max_gaps), ("twice-previous-prime", check_twice_previous)]


def run(level: str = "quick") -> list[Outcome]:
    suite = FULL if level == "full" else QUICK
    cache = _Cache()
    outcomes = []
    for name, fn in suite:
        t0 = time.perf_counter()
        try:
            passed, detail = fn(cache)
        except SieveGapsError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        outcomes.append(Outcome(name, bool(passed), detail, time.perf_counter() - t0))
    return outcomes


def verify_snapshot_file(path) -> Outcome:
    t0 = time.perf_counter()
    try:
        cycle = read_snapshot(path)
        report = validate(cycle)
        passed, detail = report.ok, f"{cycle.modulus}, phi={cycle.phi}" if report.ok else str(report)
    except SieveGapsError as exc:
        passed, detail = False, f"{getattr(exc, 'code', type(exc).__name__)}: {exc}"
    return Outcome(f"snapshot {path}", passed, detail, time.perf_counter() - t0)
