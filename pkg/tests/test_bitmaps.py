import numpy as np
import pytest

from core.bitmaps import PermSetBitmap
from core.errors import InvalidInputError, RangeError
from core.perms import rank


def test_from_ranks_and_back():
    bm = PermSetBitmap.from_ranks(4, [0, 3, 23])
    assert bm.cardinality() == 3
    assert list(bm.to_ranks()) == [0, 3, 23]
    assert 3 in bm and 4 not in bm and 99 not in bm


def test_labels_are_one_line_strings():
    bm = PermSetBitmap.from_ranks(4, [rank("4213").r, rank("1342").r])
    assert bm.labels() == ["1342", "4213"]


def test_set_operations():
    a = PermSetBitmap.from_ranks(5, range(0, 100))
    b = PermSetBitmap.from_ranks(5, range(50, 120))
    assert len(a & b) == 50
    assert len(a | b) == 120
    assert len(a - b) == 50
    assert (a - b) | (a & b) == a


def test_universe_mismatch_is_rejected():
    with pytest.raises(InvalidInputError):
        PermSetBitmap(3) & PermSetBitmap(4)


def test_out_of_range_ranks():
    with pytest.raises(RangeError):
        PermSetBitmap.from_ranks(3, [6])
    bm = PermSetBitmap(3)
    with pytest.raises(RangeError):
        bm.add(6)


def test_full_and_add():
    assert PermSetBitmap.full(5).cardinality() == 120
    bm = PermSetBitmap(5)
    bm.add(70)
    bm.add(70)
    assert bm.to_mask().sum() == 1 and 70 in bm


def test_mask_length_is_checked():
    with pytest.raises(InvalidInputError):
        PermSetBitmap.from_mask(3, np.ones(5, dtype=bool))


def test_equality_follows_contents_and_bitmaps_are_unhashable():
    a = PermSetBitmap.from_ranks(4, [1, 2])
    b = PermSetBitmap.from_ranks(4, [2, 1])
    assert a == b
    with pytest.raises(TypeError):
        hash(a)
    with pytest.raises(TypeError):
        {a}
    b.add(3)
    assert a != b and a == PermSetBitmap.from_ranks(4, [1, 2])
