import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from edgeminer.footprint import (
    MergedFM,
    MergeError,
    PartialFM,
    binarize,
    fitness,
    merge_columns,
    split_columns,
)


def test_merge_single():
    fm = merge_columns([PartialFM(0, np.array([2]), True, True)])
    assert fm.counts.tolist() == [[2]] and fm.starts == {0} and fm.ends == {0}


def test_merge_ab():
    fm = merge_columns([PartialFM(0, np.array([0, 0]), True, False), PartialFM(1, np.array([1, 0]), False, True)])
    assert fm.counts.tolist() == [[0, 1], [0, 0]]
    assert fm.starts == {0} and fm.ends == {1}


def test_merge_missing_and_duplicate_owner():
    with pytest.raises(MergeError, match="missing"):
        merge_columns([PartialFM(0, np.zeros(2, int), False, False), PartialFM(0, np.zeros(2, int), False, False)])


def test_merged_validation():
    with pytest.raises(ValueError):
        MergedFM(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        MergedFM(np.array([[-1]]))
    with pytest.raises(ValueError):
        MergedFM(np.zeros((2, 2)), starts={5})


def test_binarize_examples():
    assert binarize(MergedFM(np.array([[2]]))).counts.tolist() == [[1]]
    z = MergedFM(np.zeros((3, 3), dtype=int))
    assert binarize(z) == z


def test_fitness_examples():
    ref = MergedFM(np.array([[0, 3], [1, 0]]))
    assert fitness(ref, ref) == 1.0
    assert fitness(MergedFM(np.zeros((2, 2), int)), ref) == 0.0
    assert fitness(MergedFM(np.array([[0, 1], [0, 0]])), ref) == 0.5
    assert fitness(ref, MergedFM(np.zeros((2, 2), int))) == 1.0
    with pytest.raises(ValueError):
        fitness(MergedFM(np.zeros((3, 3), int)), ref)


def test_serialization_round_trip():
    fm = MergedFM(np.array([[0, 2, 0], [1, 0, 4], [0, 0, 7]]), {0}, {1, 2}, ["a", "b, c", "d"])
    assert MergedFM.from_json(fm.to_json()) == fm
    back = MergedFM.from_csv(fm.to_csv())
    assert (back.counts == fm.counts).all() and back.names == fm.names
    assert fm.diff(fm) == "equal"
    assert "a" in fm.diff(MergedFM(np.zeros((3, 3), int), names=fm.names))


count_matrices = st.integers(1, 6).flatmap(
    lambda n: arrays(np.int64, (n, n), elements=st.integers(0, 5))
)


@given(count_matrices, st.data())
def test_merge_split_identity(counts, data):
    n = len(counts)
    starts = data.draw(st.sets(st.integers(0, n - 1)))
    ends = data.draw(st.sets(st.integers(0, n - 1)))
    fm = MergedFM(counts, starts, ends)
    assert merge_columns(split_columns(fm), fm.names) == fm


@given(count_matrices)
def test_binarize_idempotent(counts):
    once = binarize(MergedFM(counts))
    assert binarize(once) == once
    assert set(np.unique(once.counts)) <= {0, 1}


@given(count_matrices, st.data())
def test_fitness_monotone_in_cells(counts, data):
    """Adding cells to the current matrix never lowers its recall."""
    ref = MergedFM(counts)
    mask = data.draw(arrays(np.bool_, counts.shape))
    extra = data.draw(arrays(np.bool_, counts.shape))
    small = MergedFM(np.where(mask, counts, 0))
    large = MergedFM(np.where(mask | extra, counts, 0))
    assert 0.0 <= fitness(small, ref) <= fitness(large, ref) <= 1.0
