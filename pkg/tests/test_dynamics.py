from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from sievegaps.census import census
from sievegaps.dynamics import (
    RatioTable,
    advance_counts,
    advance_to,
    asymptotic_from_table,
    predict_vs_construct,
    ratio_advance,
    ratio_sum,
    stage_ratio_sum,
    total_driving_terms,
    trajectory_counts_csv,
    trajectory_json_obj,
    trajectory_ratios_csv,
)
from sievegaps.errors import DomainError, PreconditionError
from sievegaps.numtheory import hl_ratio, next_prime, primes_up_to


@pytest.fixture(scope="module")
def table13(primorial):
    return census(primorial(13), 40, 16)


def test_advance_examples(table13):
    step = advance_counts(table13, 17)
    t = step.table
    assert t.row(2) == {1: 22275} == {1: 15 * 1485}
    assert t.row(6) == {1: 26630, 2: 17920}
    assert {d.gap for d in step.dropped} == {34, 36, 38, 40}
    assert t.stage == 17


def test_advance_matches_construction(primorial, table13):
    built = census(primorial(17), 32, 16)
    advanced = advance_counts(table13, 17).table
    for g in range(2, 33, 2):
        assert advanced.row(g) == built.row(g), g


def test_advance_rejects_non_successor(table13):
    with pytest.raises(DomainError):
        advance_counts(table13, 19)
    with pytest.raises(DomainError):
        advance_counts(table13, 15)


def test_advance_rejects_incomplete_rows(primorial):
    t = census(primorial(13), 32, 5)
    with pytest.raises(PreconditionError, match="g=12"):
        advance_counts(t, 17)


def test_sum_preservation(table13):
    after = advance_counts(table13, 17).table
    for g in range(2, 33, 2):
        assert after.total(g) == 15 * table13.total(g)


def test_ratio_advance_examples(table13):
    r13 = RatioTable.from_counts(table13)
    assert r13.row(6) == {1: Fraction(1690, 1485), 2: Fraction(1280, 1485)}
    r17 = ratio_advance(r13, 17).table
    assert r17.row(6) == {1: Fraction(26630, 22275), 2: Fraction(17920, 22275)}
    assert r13.ratio_sum(6) == r17.ratio_sum(6) == 2 == hl_ratio(6)
    assert r17.row(2) == {1: Fraction(1)}


def test_ratio_advance_agrees_with_normalized_counts(table13):
    ratios = RatioTable.from_counts(table13)
    counts = table13
    for p in (17, 19, 23, 29, 31):
        ratios = ratio_advance(ratios, p).table
        counts = advance_counts(counts, p, rows=sorted(counts.complete_gaps & set(range(2, 33, 2)))).table
        normalized = RatioTable.from_counts(counts)
        for g in range(2, 33, 2):
            assert ratios.row(g) == normalized.row(g)
            assert ratios.ratio_sum(g) == hl_ratio(g)


def test_asymptotic_from_table(table13):
    assert asymptotic_from_table(table13, 8) == 1
    assert asymptotic_from_table(table13, 10) == Fraction(4, 3)
    assert asymptotic_from_table(table13, 30) == Fraction(8, 3)
    with pytest.raises(PreconditionError, match="34"):
        asymptotic_from_table(table13, 34)


def test_stage_ratio_sum_examples():
    assert stage_ratio_sum(222, 31) == 2
    assert stage_ratio_sum(222, 37) == Fraction(72, 35)
    assert stage_ratio_sum(74, 31) == 1
    assert stage_ratio_sum(222, 13) == 2


@given(st.integers(1, 400))
def test_stage_ratio_sum_reaches_hl_and_is_monotone(n):
    g = 2 * n
    last = Fraction(0)
    for p in primes_up_to(410)[1:]:
        s = stage_ratio_sum(g, p)
        assert s >= last
        last = s
    assert last == hl_ratio(g)


def test_stage_ratio_sum_domain():
    with pytest.raises(DomainError):
        stage_ratio_sum(7, 13)
    with pytest.raises(DomainError):
        stage_ratio_sum(6, 2)


@pytest.mark.parametrize("g, expected", [(10, (5, 4)), (6, (3, 2)), (12, (3, 2)), (2, (2, 1)), (30, (5, 8)), (20, (5, 4))])
def test_total_driving_terms(g, expected):
    assert total_driving_terms(g) == expected


@pytest.mark.parametrize("g", [6, 10, 12, 14, 18, 20, 22, 26, 28, 30, 42, 44])
def test_total_driving_terms_against_census(primorial, g):
    qbar, total = total_driving_terms(g)
    assert census(primorial(qbar), g, g // 2).total(g) == total


def test_ratio_sum_222_at_13(primorial):
    # 222 = 2*3*37: only the 3 has entered by 13#
    t = census(primorial(13), 222, 111)
    assert ratio_sum(t, 222) == 2


def test_predict_vs_construct_short():
    r = predict_vs_construct(13, 17, 32, 16)
    assert r.ok and r.stages == [17]
    r = predict_vs_construct(13, 17, 40, 16)
    assert r.ok and r.excluded_gaps == [34, 36, 38, 40]


def test_predict_vs_construct_streams_last_stage():
    r = predict_vs_construct(7, 13, 20, 10, stage_limit=1000)
    assert r.ok and r.stages == [11, 13] and r.cells_checked > 0


def test_predict_vs_construct_detects_tampering(primorial):
    bad = census(primorial(11), 20, 10)
    bad.counts[6][1] += 1
    predicted = advance_counts(bad, 13).table
    built = census(primorial(13), 20, 10)
    assert predicted.row(6) != built.row(6)


def test_advance_to_and_exports(table13):
    stages, dropped = advance_to(table13, 19)
    assert [t.stage for t in stages] == [13, 17, 19]
    assert stages[-1].row(2) == {1: 1485 * 15 * 17}
    counts_csv = trajectory_counts_csv(stages)
    assert counts_csv.splitlines()[0] == "stage_prime,gap,length,count"
    assert "13,2,1,1485" in counts_csv.splitlines()
    ratios_csv = trajectory_ratios_csv(stages)
    assert ratios_csv.splitlines()[0] == "stage_prime,gap,ratio_sum_exact,ratio_sum_decimal"
    assert "19,30,8/3,2.6667" in ratios_csv.splitlines()
    obj = trajectory_json_obj(stages, dropped)
    assert all(row["matches_hl"] for st_ in obj["stages"] for row in st_["rows"])
    assert all(row["stage_ratio_sum_exact"] == row["ratio_sum_exact"] for st_ in obj["stages"] for row in st_["rows"])
    assert {d["gap"] for d in obj["dropped"]} == {34, 36, 38, 40}


def test_advance_to_identity(table13):
    stages, dropped = advance_to(table13, 13)
    assert stages == [table13] and not dropped


def test_long_run_keeps_ratio_of_six(table13):
    stages, _ = advance_to(table13, 31)
    assert all(ratio_sum(t, 6) == 2 for t in stages)
    assert stages[-1].stage == 31 and next_prime(29) == 31
