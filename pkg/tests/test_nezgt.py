import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spmvpart import (
    Axis,
    LinePartition,
    RefineConfig,
    col_nnz_counts,
    fd,
    nezgt_partition,
    phase0_sort,
    phase1_ls,
    phase2_refine,
    row_nnz_counts,
)

DEMO_ROW_COUNTS = [2, 1, 4, 10, 3, 4, 8, 15, 10, 12, 6, 7, 12, 1, 9]


def brute_force_fd(counts, f):
    best = None
    for assign in itertools.product(range(f), repeat=len(counts)):
        loads = [0] * f
        for line, part in zip(range(len(counts)), assign):
            loads[part] += counts[line]
        spread = max(loads) - min(loads)
        if best is None or spread < best:
            best = spread
    return best


# ---------------------------------------------------------------- phase 0

def test_phase0_descending_with_index_ties():
    assert phase0_sort([3, 1, 3, 2]) == [0, 2, 3, 1]


def test_phase0_ascending():
    assert phase0_sort([3, 1, 3, 2], order="ascending") == [1, 3, 0, 2]


def test_phase0_rejects_unknown_order():
    with pytest.raises(ValueError, match="order"):
        phase0_sort([1, 2], order="sideways")


def test_phase0_fixture_rows(demo15):
    counts = list(row_nnz_counts(demo15))
    order = phase0_sort(counts)
    assert [counts[i] for i in order] == [15, 12, 12, 10, 10, 9, 8, 7, 6, 4, 4, 3, 2, 1, 1]


# ---------------------------------------------------------------- phase 1

def test_phase1_trace():
    counts = [5, 4, 3, 3, 1]
    p = phase1_ls(phase0_sort(counts), counts, 2)
    assert p.loads == (8, 8)
    assert p.assignment == (0, 1, 1, 0, 1)


def test_phase1_rejects_zero_fragments():
    with pytest.raises(ValueError, match="f"):
        phase1_ls([0], [3], 0)


def test_phase1_more_fragments_than_lines():
    counts = [4, 2]
    p = phase1_ls(phase0_sort(counts), counts, 5)
    assert p.loads == (4, 2, 0, 0, 0)
    assert p.lines(3) == []


def test_phase1_requires_permutation():
    with pytest.raises(ValueError, match="permutation"):
        phase1_ls([0, 0], [3, 1], 2)
    with pytest.raises(ValueError, match="permutation"):
        phase1_ls([0], [3, 1], 2)


def test_phase1_fixture_rows_f6(demo15):
    counts = list(row_nnz_counts(demo15))
    p = phase1_ls(phase0_sort(counts), counts, 6)
    assert sorted(p.loads, reverse=True) == [18, 18, 17, 17, 17, 17]
    assert fd(p) == 1


def test_phase1_fixture_cols_f6(demo15):
    # before refinement the column split is visibly lopsided
    counts = list(col_nnz_counts(demo15))
    p = phase1_ls(phase0_sort(counts), counts, 6)
    assert sorted(p.loads, reverse=True) == [20, 19, 19, 16, 15, 15]
    assert fd(p) == 5


# ---------------------------------------------------------------- fd

def test_fd_examples():
    assert fd(LinePartition(Axis.ROW, 2, (0, 1), (7, 4))) == 3
    assert fd(LinePartition(Axis.ROW, 3, (0, 1, 2), (5, 5, 5))) == 0


# ---------------------------------------------------------------- phase 2

def test_phase2_no_profitable_move():
    p = LinePartition(Axis.ROW, 2, (0, 1), (10, 2))
    q = phase2_refine(p, [10, 2])
    assert q.loads == (10, 2)
    assert q.assignment == p.assignment


def test_phase2_stuck_at_local_optimum_that_is_global():
    counts = [9, 5, 4, 4, 2]
    p = phase1_ls(phase0_sort(counts), counts, 2)
    assert p.loads == (13, 11)
    q = phase2_refine(p, counts)
    assert q.loads == (13, 11)
    assert fd(q) == brute_force_fd(counts, 2) == 2


def test_phase2_transfer():
    counts = [4, 1, 1]
    p = LinePartition(Axis.ROW, 2, (0, 0, 1), (5, 1))
    q = phase2_refine(p, counts)
    assert sorted(q.loads) == [2, 4]
    assert q.assignment == (0, 1, 1)


def test_phase2_exchange():
    counts = [5, 3, 4, 2]
    p = LinePartition(Axis.ROW, 2, (0, 0, 1, 1), (8, 6))
    q = phase2_refine(p, counts)
    assert q.loads == (7, 7)
    # best-improving tie-break lands on swapping the two heaviest lines
    assert q.assignment == (1, 0, 0, 1)


def test_phase2_strategy_best_vs_first():
    counts = [6, 4, 1, 1]
    p = LinePartition(Axis.ROW, 2, (0, 0, 1, 1), (10, 2))
    best = phase2_refine(p, counts, RefineConfig(max_iterations=1, strategy="best"))
    first = phase2_refine(p, counts, RefineConfig(max_iterations=1, strategy="first"))
    assert best.loads == (6, 6)
    assert first.loads == (4, 8)


def test_phase2_zero_iterations_is_identity():
    counts = [6, 4, 1, 1]
    p = LinePartition(Axis.ROW, 2, (0, 0, 1, 1), (10, 2))
    q = phase2_refine(p, counts, RefineConfig(max_iterations=0))
    assert q.assignment == p.assignment


def test_phase2_rejects_unknown_strategy():
    p = LinePartition(Axis.ROW, 2, (0, 1), (3, 1))
    with pytest.raises(ValueError, match="strategy"):
        phase2_refine(p, [3, 1], RefineConfig(strategy="worst"))


# ---------------------------------------------------------------- pipeline

def test_partition_rows_f2(demo15):
    p = nezgt_partition(demo15, Axis.ROW, 2)
    assert p.loads == (52, 52)
    assert fd(p) == brute_force_fd(DEMO_ROW_COUNTS, 2) == 0
    assert sorted(p.lines(0)) == [0, 2, 3, 5, 6, 7, 14]
    assert sorted(p.lines(1)) == [1, 4, 8, 9, 10, 11, 12, 13]


def test_partition_cols_f2(demo15):
    p = nezgt_partition(demo15, Axis.COLUMN, 2)
    assert p.loads == (52, 52)
    assert sorted(p.lines(0)) == [0, 3, 4, 5, 7, 10, 11, 13]
    assert sorted(p.lines(1)) == [1, 2, 6, 8, 9, 12, 14]


def test_partition_cols_f6_reaches_optimum(demo15):
    p = nezgt_partition(demo15, Axis.COLUMN, 6)
    assert sorted(p.loads, reverse=True) == [18, 18, 17, 17, 17, 17]
    # 104 = 6*17 + 2, so no 6-way split can spread by less than 1
    assert fd(p) == 1


def test_partition_single_fragment(demo15):
    p = nezgt_partition(demo15, Axis.ROW, 1)
    assert p.loads == (104,)
    assert fd(p) == 0
    assert p.lines(0) == list(range(15))


def test_partition_axis_wiring(demo15):
    assert nezgt_partition(demo15, Axis.ROW, 3).axis is Axis.ROW
    assert nezgt_partition(demo15, Axis.COLUMN, 3).axis is Axis.COLUMN


# ---------------------------------------------------------------- properties

count_lists = st.lists(st.integers(0, 20), min_size=1, max_size=12)


@given(count_lists, st.integers(1, 4))
@settings(max_examples=80, deadline=None)
def test_phase1_conserves_work_and_loads_match(counts, f):
    p = phase1_ls(phase0_sort(counts), counts, f)
    assert sum(p.loads) == sum(counts)
    rebuilt = [0] * f
    for line, part in enumerate(p.assignment):
        rebuilt[part] += counts[line]
    assert tuple(rebuilt) == p.loads


@given(count_lists, st.integers(1, 4))
@settings(max_examples=80, deadline=None)
def test_phase2_never_increases_spread(counts, f):
    p = phase1_ls(phase0_sort(counts), counts, f)
    q = phase2_refine(p, counts)
    assert fd(q) <= fd(p)
    assert sum(q.loads) == sum(counts)


@given(st.lists(st.integers(0, 9), min_size=1, max_size=10), st.integers(2, 3))
@settings(max_examples=40, deadline=None)
def test_first_improving_also_never_increases_spread(counts, f):
    p = phase1_ls(phase0_sort(counts), counts, f)
    q = phase2_refine(p, counts, RefineConfig(strategy="first"))
    assert fd(q) <= fd(p)


@given(count_lists, st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_pipeline_is_deterministic(counts, f):
    a = phase2_refine(phase1_ls(phase0_sort(counts), counts, f), counts)
    b = phase2_refine(phase1_ls(phase0_sort(counts), counts, f), counts)
    assert a.assignment == b.assignment and a.loads == b.loads
