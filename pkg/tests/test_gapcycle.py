import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sievegaps.errors import DomainError, ResourceError, StreamAborted
from sievegaps.gapcycle import (
    CollectingSink,
    CountingSink,
    GapCycle,
    base_cycle,
    extend,
    extend_streaming,
    generators_of,
    primorial_cycle,
    validate,
)
from sievegaps.numtheory import euler_phi, factorize

from oracles import brute_cycle, coprime_residues

SMALL_PRIMES = [2, 3, 5, 7, 11, 13]


@pytest.mark.parametrize("p, gaps", [(3, [1, 2]), (5, [1, 1, 1, 2]), (2, [2]), (7, [1, 1, 1, 1, 1, 2])])
def test_base_cycle(p, gaps):
    c = base_cycle(p)
    assert c.tolist() == gaps and c.N == p


def test_base_cycle_rejects_composites():
    with pytest.raises(DomainError):
        base_cycle(9)


def test_extend_examples():
    c6 = GapCycle.from_gaps([4, 2], 6)
    assert extend(c6, 5).tolist() == [6, 4, 2, 4, 2, 4, 6, 2]
    assert extend(base_cycle(2), 3).tolist() == [4, 2]
    assert extend(c6, 3).tolist() == [4, 2, 4, 2, 4, 2]


def test_extend_examples_against_gcd_scan():
    assert brute_cycle(6) == [4, 2]
    assert brute_cycle(18) == [4, 2, 4, 2, 4, 2]
    assert brute_cycle(30) == [6, 4, 2, 4, 2, 4, 6, 2]


def test_extend_rejects_composite():
    with pytest.raises(DomainError):
        extend(base_cycle(5), 4)


def _moduli_up_to(limit: int):
    """Products of small prime powers, each with a construction path from a prime."""
    out = set()

    def rec(n, path):
        if n > limit:
            return
        out.add((n, tuple(path)))
        for q in SMALL_PRIMES:
            if n * q <= limit:
                rec(n * q, path + [q])

    for p in SMALL_PRIMES:
        rec(p, [p])
    seen = {}
    for n, path in sorted(out):
        seen.setdefault(n, path)
    return seen


def test_extend_matches_gcd_scan_for_many_moduli():
    for n, path in _moduli_up_to(3000).items():
        c = base_cycle(path[0])
        for q in path[1:]:
            c = extend(c, q)
        assert c.N == n
        assert c.tolist() == brute_cycle(n), n


@pytest.mark.slow
def test_generators_match_coprime_scan_near_a_million():
    c = primorial_cycle(13)
    big = extend(extend(c, 7), 3)  # 30030 * 21 = 630630
    assert generators_of(big) == coprime_residues(630630)
    c17 = extend(c, 17)
    assert generators_of(c17) == coprime_residues(510510)


def test_extend_length_rule():
    c = primorial_cycle(7)
    assert extend(c, 5).phi == 5 * c.phi
    assert extend(c, 11).phi == 10 * c.phi


def test_construction_order_independence():
    a = extend(extend(base_cycle(2), 3), 5)
    b = extend(extend(base_cycle(2), 5), 3)
    c = extend(extend(base_cycle(5), 2), 3)
    assert a == b == c
    assert a.tolist() == [6, 4, 2, 4, 2, 4, 6, 2]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([2, 3, 5, 7, 11]), min_size=1, max_size=5))
def test_extensions_keep_invariants(primes):
    c = base_cycle(primes[0])
    for q in primes[1:]:
        c = extend(c, q)
        assert int(c.gaps.sum()) == c.N
    report = validate(c)
    assert report.ok, str(report)
    assert c.phi == euler_phi(c.modulus)


def test_streaming_examples():
    c6 = GapCycle.from_gaps([4, 2], 6)
    sink = CollectingSink()
    s = extend_streaming(c6, 5, sink)
    assert sink.gaps().tolist() == [6, 4, 2, 4, 2, 4, 6, 2]
    assert (s.count, s.total, s.closures) == (8, 30, 2)

    counting = CountingSink()
    s = extend_streaming(primorial_cycle(5), 7, counting)
    assert (s.count, s.total, s.closures) == (48, 210, 8)
    assert counting.count == 48

    s = extend_streaming(primorial_cycle(5), 3, CountingSink())
    assert s.closures == 0 and s.count == 24 and s.total == 90


@pytest.mark.parametrize("chunk", [1, 7, 64, 1000, 1 << 22])
def test_streaming_equals_extend_for_any_chunking(primorial, chunk):
    c = primorial(11)
    sink = CollectingSink()
    s = extend_streaming(c, 13, sink, chunk_size=chunk)
    expected = primorial(13)
    assert np.array_equal(sink.gaps(), expected.gaps)
    assert s.closures == c.phi and s.count == expected.phi and s.total == expected.N


def test_streaming_with_bounded_handoff(primorial):
    sink = CollectingSink()
    s = extend_streaming(primorial(13), 17, sink, chunk_size=10_000, handoff=2)
    assert np.array_equal(sink.gaps(), primorial(17).gaps)
    assert s.count == primorial(17).phi


@pytest.mark.parametrize("handoff", [0, 2])
def test_sink_failure_reports_partial_progress(primorial, handoff):
    seen = []

    def flaky(chunk):
        if len(seen) == 3:
            raise OSError("disk full")
        seen.append(chunk.size)

    with pytest.raises(StreamAborted) as info:
        extend_streaming(primorial(11), 13, flaky, chunk_size=500, handoff=handoff)
    summary = info.value.summary
    assert summary.count == sum(seen) == 1500
    assert isinstance(info.value.__cause__, OSError)


def test_validate_accepts_real_cycles(primorial):
    for p in SMALL_PRIMES:
        assert validate(primorial(p)).ok
    assert validate(base_cycle(7)).ok


def test_validate_reports_counterexamples():
    r = validate(GapCycle.from_gaps([4, 2, 2], 8))
    assert r["sum"].passed and not r["length"].passed and not r.ok
    r = validate(GapCycle.from_gaps([2, 4, 4, 2], 12))
    assert r["length"].passed and r["sum"].passed and r["final-gap"].passed
    assert not r["symmetry"].passed and r["symmetry"].first_violation == 0
    r = validate(GapCycle.from_gaps([1, 6, 3, 2], 12))
    assert not r["even-min-gap"].passed and r["even-min-gap"].first_violation == 0


def test_validate_flags_wrong_final_gap():
    r = validate(GapCycle.from_gaps([2, 4], 6))
    assert not r["final-gap"].passed and r["final-gap"].first_violation == 1


def test_generators_of_examples(primorial):
    assert generators_of(primorial(5)) == [1, 7, 11, 13, 17, 19, 23, 29]
    assert generators_of(primorial(5)) == coprime_residues(30)
    assert generators_of(base_cycle(5)) == [1, 2, 3, 4]
    assert generators_of(base_cycle(2)) == [1]


def test_generators_of_guard(primorial):
    with pytest.raises(ResourceError):
        generators_of(primorial(13), limit=1000)


def test_extend_guard(primorial):
    with pytest.raises(ResourceError):
        extend(primorial(13), 17, limit=10_000)


def test_gap_width_promotes():
    c = GapCycle.from_gaps([300, 2], factorize(302))
    assert c.width == 2
    assert GapCycle.from_gaps([2], 2).width == 1


def test_gap_cycle_is_immutable(primorial):
    with pytest.raises(ValueError):
        primorial(5).gaps[0] = 9


@pytest.mark.parametrize("bad", [[], [0, 2], [-1, 3]])
def test_gap_cycle_rejects_non_positive(bad):
    with pytest.raises(DomainError):
        GapCycle.from_gaps(bad, 2)
