"""Partition enumeration and the crank/rank statistic tables."""

import pytest
from hypothesis import given, settings, strategies as st

from qcrank.partitions import (
    CongruenceReport,
    ResourceLimit,
    beck_congruence_check,
    crank,
    delta_offset,
    enumerate_partitions,
    ones,
    partition_counts,
    rank,
    stats_table,
)

# p(0) .. p(20)
P_SMALL = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135,
           176, 231, 297, 385, 490, 627]


def brute_crank(parts: list[int]) -> int:
    w = sum(1 for p in parts if p == 1)
    if w == 0:
        return max(parts)
    mu = sum(1 for p in parts if p > w)
    return mu - w


def test_partition_counts_table():
    assert partition_counts(20) == P_SMALL


def test_enumeration_count_matches_p():
    for n in range(9):
        assert sum(1 for _ in enumerate_partitions(n)) == P_SMALL[n]


def test_enumeration_yields_partitions_of_n():
    for parts in enumerate_partitions(7):
        assert sum(parts) == 7
        assert list(parts) == sorted(parts, reverse=True)


def test_ones_crank_rank_definitions():
    assert ones([1, 1, 3]) == 2
    assert crank([2, 3]) == 3          # no ones: crank is the largest part
    assert crank([1, 1, 3]) == -1      # mu(1,1,3) = 1, omega = 2
    assert rank([1, 1, 3]) == 0        # largest 3 minus 3 parts


def test_crank_matches_brute_force():
    for n in range(1, 13):
        for parts in enumerate_partitions(n):
            assert crank(parts) == brute_crank(list(parts)), parts


def test_rank_matches_definition():
    for n in range(1, 13):
        for parts in enumerate_partitions(n):
            assert rank(parts) == max(parts) - len(parts)


def test_statistics_reject_empty():
    from qcrank.partitions import EmptyPartition
    with pytest.raises(EmptyPartition):
        crank([])
    with pytest.raises(EmptyPartition):
        rank([])


def test_stats_table_totals():
    st5 = stats_table(5, 11)
    assert st5.partitions == 7
    assert sum(st5.crank_counts) == 7
    assert sum(st5.rank_counts) == 7
    # total ones over all partitions of 5: brute sum
    total = sum(ones(p) for p in enumerate_partitions(5))
    assert st5.total_ones == total
    total_parts = sum(len(p) for p in enumerate_partitions(5))
    assert st5.total_parts == total_parts


def test_stats_table_against_enumeration():
    for n in (3, 6, 9):
        m = 7
        table = stats_table(n, m)
        M = [0] * m
        N = [0] * m
        MW = [0] * m
        NT = [0] * m
        for parts in enumerate_partitions(n):
            parts = list(parts)
            M[crank(parts) % m] += 1
            N[rank(parts) % m] += 1
            MW[crank(parts) % m] += ones(parts)
            NT[rank(parts) % m] += len(parts)
        assert table.crank_counts == M
        assert table.rank_counts == N
        assert table.ones_by_crank == MW
        assert table.parts_by_rank == NT


def test_stats_table_n_zero():
    table = stats_table(0, 11)
    assert table.partitions == 1
    assert sum(table.crank_counts) == 0
    assert table.total_ones == 0


def test_stats_table_known_row():
    # n = 6, m = 11: crank residue classes all occupied once
    table = stats_table(6, 11)
    assert table.crank_counts == [1] * 11
    assert table.ones_by_crank == [1, 1, 0, 0, 0, 6, 0, 4, 3, 2, 2]
    assert table.parts_by_rank == [3, 5, 2, 2, 0, 1, 6, 0, 5, 4, 7]


def test_rows_shape():
    rows = stats_table(4, 5).rows()
    assert len(rows) == 5
    assert {r["class"] for r in rows} == set(range(5))
    assert all(set(r) == {"n", "m", "class", "M", "N", "M_omega", "NT"}
               for r in rows)


def test_resource_guard():
    with pytest.raises(ResourceLimit):
        stats_table(99, 11)
    with pytest.raises(ResourceLimit):
        list(enumerate_partitions(99))
    # allow_large lifts the guard
    assert stats_table(71, 11, allow_large=True).partitions > 0


def test_delta_offset():
    assert delta_offset(5) == 1
    assert delta_offset(7) == 2
    assert delta_offset(11) == 5
    with pytest.raises(ValueError):
        delta_offset(6)


def test_congruence_parts_by_rank_mod5():
    rep = beck_congruence_check("parts_by_rank", 5, 8)
    assert isinstance(rep, CongruenceReport)
    assert rep.all_ok
    assert {r["offset"] for r in rep.rows} == {1, 4}
    assert max(r["arg"] for r in rep.rows) == 44


def test_congruence_ones_by_crank_mod5():
    rep = beck_congruence_check("ones_by_crank", 5, 8)
    assert rep.all_ok
    assert all(r["offset"] == 4 for r in rep.rows)


def test_congruence_ones_difference():
    for p in (5, 7):
        rep = beck_congruence_check("ones_difference", p, 6)
        assert rep.all_ok
        assert all(r["value"] == 0 for r in rep.rows)


def test_congruence_rejects_unsupported():
    with pytest.raises(ValueError):
        beck_congruence_check("parts_by_rank", 11, 3)
    with pytest.raises(ValueError):
        beck_congruence_check("nonsense", 5, 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=24))
def test_crank_consistency_random_n(n):
    # the two crank branches (with and without ones) partition the count
    with_ones = 0
    without = 0
    for parts in enumerate_partitions(n):
        parts = list(parts)
        if ones(parts):
            with_ones += 1
        else:
            without += 1
        assert crank(parts) == brute_crank(parts)
    assert with_ones + without == partition_counts(n)[n]
