"""Dense rank-indexed sets over S_m, packed into little-endian 64-bit words."""

import math

import numpy as np

from core.errors import InvalidInputError, RangeError
from core.perms import format_perm, unrank


class PermSetBitmap:
    __slots__ = ("level", "size", "words")

    def __init__(self, level, words=None):
        self.level = level
        self.size = math.factorial(level)
        n_words = (self.size + 63) // 64
        if words is None:
            words = np.zeros(n_words, dtype="<u8")
        words = np.asarray(words, dtype="<u8")
        if words.shape != (n_words,):
            raise InvalidInputError(
                f"bitmap over S_{level} needs {n_words} words, got {words.shape}"
            )
        self.words = words

    @classmethod
    def from_mask(cls, level, mask):
        mask = np.asarray(mask, dtype=bool)
        size = math.factorial(level)
        if mask.shape != (size,):
            raise InvalidInputError(f"mask over S_{level} needs length {size}")
        n_words = (size + 63) // 64
        packed = np.zeros(n_words * 8, dtype=np.uint8)
        bits = np.packbits(mask, bitorder="little")
        packed[: bits.size] = bits
        return cls(level, packed.view("<u8"))

    @classmethod
    def from_ranks(cls, level, ranks):
        size = math.factorial(level)
        ranks = np.asarray([int(r) for r in ranks], dtype=np.int64)
        if ranks.size and (ranks.min() < 0 or ranks.max() >= size):
            raise RangeError(f"rank outside 0..{size - 1} for S_{level}")
        mask = np.zeros(size, dtype=bool)
        mask[ranks] = True
        return cls.from_mask(level, mask)

    @classmethod
    def full(cls, level):
        return cls.from_mask(level, np.ones(math.factorial(level), dtype=bool))

    def to_mask(self):
        bits = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return bits[: self.size].astype(bool)

    def to_ranks(self):
        return np.flatnonzero(self.to_mask())

    def cardinality(self):
        return int(np.unpackbits(self.words.view(np.uint8)).sum())

    def __len__(self):
        return self.cardinality()

    def __contains__(self, r):
        r = int(r)
        if not 0 <= r < self.size:
            return False
        return bool((int(self.words[r >> 6]) >> (r & 63)) & 1)

    def _check(self, other):
        if not isinstance(other, PermSetBitmap) or other.level != self.level:
            raise InvalidInputError(
                f"bitmap universe mismatch: S_{self.level} vs "
                f"S_{getattr(other, 'level', '?')}"
            )

    def __and__(self, other):
        self._check(other)
        return PermSetBitmap(self.level, self.words & other.words)

    def __or__(self, other):
        self._check(other)
        return PermSetBitmap(self.level, self.words | other.words)

    def __sub__(self, other):
        self._check(other)
        return PermSetBitmap(self.level, self.words & ~other.words)

    def __eq__(self, other):
        return (
            isinstance(other, PermSetBitmap)
            and other.level == self.level
            and bool(np.array_equal(self.words, other.words))
        )

    # mutable through add(), so not hashable
    __hash__ = None

    def add(self, r):
        if not 0 <= r < self.size:
            raise RangeError(f"rank {r} outside 0..{self.size - 1}")
        self.words[r >> 6] |= np.uint64(1) << np.uint64(r & 63)

    def copy(self):
        return PermSetBitmap(self.level, self.words.copy())

    def labels(self):
        return [format_perm(unrank(self.level, int(r)).values) for r in self.to_ranks()]

    def __repr__(self):
        return f"PermSetBitmap(S_{self.level}, |A|={self.cardinality()})"
