"""Permutation arithmetic in one-line notation.

Permutations are 1-based (values 1..n) on every interface. Ranks are
lexicographic positions computed through the Lehmer code, so that rank 0 is the
identity and rank n!-1 is the reversal.
"""

import itertools
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from core.errors import InvalidInputError, RangeError

SYMMETRIES = ("reverse", "complement", "inverse")

PermRank = namedtuple("PermRank", ["n", "r"])


@dataclass(frozen=True)
class Permutation:
    values: tuple

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        if not values:
            raise InvalidInputError("a permutation needs length n >= 1")
        if sorted(values) != list(range(1, len(values) + 1)):
            raise InvalidInputError(
                f"{values} is not a bijection of 1..{len(values)}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def parse(cls, text):
        text = str(text).strip()
        if "," in text:
            parts = [t for t in text.split(",") if t.strip()]
        else:
            parts = list(text)
        try:
            return cls(tuple(int(t) for t in parts))
        except ValueError as e:
            raise InvalidInputError(f"cannot parse permutation '{text}': {e}")

    @property
    def n(self):
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __str__(self):
        return format_perm(self.values)


def format_perm(values):
    values = [int(v) for v in values]
    if len(values) <= 9:
        return "".join(str(v) for v in values)
    return ",".join(str(v) for v in values)


def as_perm(p):
    if isinstance(p, Permutation):
        return p
    if isinstance(p, str):
        return Permutation.parse(p)
    return Permutation(tuple(p))


def rank(p):
    p = as_perm(p)
    values = p.values
    n = len(values)
    r = 0
    for i, v in enumerate(values):
        smaller_after = sum(1 for w in values[i + 1 :] if w < v)
        r += smaller_after * math.factorial(n - 1 - i)
    return PermRank(n, r)


def unrank(n, r):
    if n < 1:
        raise RangeError(f"length n={n} must be >= 1")
    total = math.factorial(n)
    if not 0 <= r < total:
        raise RangeError(f"rank {r} out of range 0..{total - 1} for n={n}")
    remaining = list(range(1, n + 1))
    values = []
    for i in range(n):
        digit, r = divmod(r, math.factorial(n - 1 - i))
        values.append(remaining.pop(digit))
    return Permutation(tuple(values))


def standardize(seq):
    seq = list(seq)
    if not seq:
        raise InvalidInputError("cannot standardize an empty sequence")
    if len(set(seq)) != len(seq):
        raise InvalidInputError(f"sequence {seq} has duplicate entries")
    order = sorted(range(len(seq)), key=lambda i: seq[i])
    out = [0] * len(seq)
    for stat, i in enumerate(order, 1):
        out[i] = stat
    return Permutation(tuple(out))


def delete_at(p, i):
    p = as_perm(p)
    if p.n < 2:
        raise RangeError("deletion needs a permutation of length >= 2")
    if not 1 <= i <= p.n:
        raise RangeError(f"position {i} out of range 1..{p.n}")
    removed = p.values[i - 1]
    return Permutation(
        tuple(v - (v > removed) for k, v in enumerate(p.values) if k != i - 1)
    )


def successions(p):
    values = as_perm(p).values
    return sum(1 for a, b in zip(values, values[1:]) if abs(b - a) == 1)


def symmetry(p, op):
    p = as_perm(p)
    n = p.n
    if op == "reverse":
        return Permutation(p.values[::-1])
    if op == "complement":
        return Permutation(tuple(n + 1 - v for v in p.values))
    if op == "inverse":
        inv = [0] * n
        for pos, v in enumerate(p.values, 1):
            inv[v - 1] = pos
        return Permutation(tuple(inv))
    raise InvalidInputError(f"unknown symmetry '{op}', expected one of {SYMMETRIES}")


def covers(rho, pi):
    rho, pi = as_perm(rho), as_perm(pi)
    if rho.n != pi.n + 1:
        raise InvalidInputError(
            f"covers() needs lengths m+1 and m, got {rho.n} and {pi.n}"
        )
    return any(delete_at(rho, i) == pi for i in range(1, rho.n + 1))


# ─── Vectorised tables (used by the coverage graph and samplers) ─────────


def all_permutations(n):
    """All of S_n as an (n!, n) int16 array in lexicographic (rank) order."""
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int16)


def rank_rows(table):
    table = np.asarray(table)
    m, n = table.shape
    ranks = np.zeros(m, dtype=np.int64)
    for i in range(n - 1):
        smaller_after = (table[:, i + 1 :] < table[:, i : i + 1]).sum(axis=1)
        ranks += smaller_after * math.factorial(n - 1 - i)
    return ranks


def delete_column(table, i):
    """Standardized rows of `table` with 0-based column i removed."""
    removed = table[:, i : i + 1]
    rest = np.delete(table, i, axis=1)
    return rest - (rest > removed).astype(table.dtype)


def symmetry_rows(table, op):
    n = table.shape[1]
    if op == "reverse":
        return table[:, ::-1].copy()
    if op == "complement":
        return (n + 1 - table).astype(table.dtype)
    if op == "inverse":
        inv = np.empty_like(table)
        rows = np.arange(table.shape[0])[:, None]
        inv[rows, table - 1] = np.arange(1, n + 1, dtype=table.dtype)[None, :]
        return inv
    raise InvalidInputError(f"unknown symmetry '{op}', expected one of {SYMMETRIES}")
