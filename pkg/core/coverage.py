"""Bipartite incidence between S_n (patterns) and S_{n+1} (covers).

The graph is built once by enumerating S_{n+1} in rank order and deleting each
position; a single pass fills both adjacency directions. Both directions are
stored in CSR form (ptr/idx arrays sorted by rank). After `build` the object
is treated as read-only.
"""

import math
from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np

from core.bitmaps import PermSetBitmap
from core.config import DEFAULTS
from core.errors import InvalidInputError, RangeError, ResourceLimitError
from core.perms import (
    PermRank,
    Permutation,
    all_permutations,
    delete_column,
    format_perm,
    rank,
    rank_rows,
)

COUNTEREXAMPLE_CAP = 20
READINGS = ("positions", "positions_and_values", "positions_or_values")


class CoverageGraph:
    def __init__(self, n, cover_table, deletions, cover_ptr, cover_idx, pattern_ptr, pattern_idx):
        self.n = n
        self.n_patterns = math.factorial(n)
        self.n_covers = math.factorial(n + 1)
        self.cover_table = cover_table
        self.deletions = deletions
        self.cover_ptr = cover_ptr
        self.cover_idx = cover_idx
        self.pattern_ptr = pattern_ptr
        self.pattern_idx = pattern_idx
        self._cover_matrix = None
        self._pattern_table = None
        self._pair_counts = None

    # ─── Rank arguments ─────────────────────────────────────
    def _pattern_rank(self, pi):
        return self._rank_arg(pi, self.n, self.n_patterns)

    def _cover_rank(self, rho):
        return self._rank_arg(rho, self.n + 1, self.n_covers)

    @staticmethod
    def _rank_arg(value, level, size):
        if isinstance(value, (Permutation, str)):
            value = rank(value)
        if isinstance(value, PermRank):
            if value.n != level:
                raise InvalidInputError(f"expected a rank in S_{level}, got S_{value.n}")
            value = value.r
        r = int(value)
        if not 0 <= r < size:
            raise RangeError(f"rank {r} out of range 0..{size - 1} for S_{level}")
        return r

    # ─── Adjacency ─────────────────────────────────────────
    def cover_ranks(self, pi):
        r = self._pattern_rank(pi)
        return self.cover_idx[self.cover_ptr[r] : self.cover_ptr[r + 1]]

    def pattern_ranks(self, rho):
        r = self._cover_rank(rho)
        return self.pattern_idx[self.pattern_ptr[r] : self.pattern_ptr[r + 1]]

    def covers_of(self, pi):
        return PermSetBitmap.from_ranks(self.n + 1, self.cover_ranks(pi))

    def patterns_of(self, rho):
        return PermSetBitmap.from_ranks(self.n, self.pattern_ranks(rho))

    def joint_covers(self, pi, pi2):
        return self.covers_of(pi) & self.covers_of(pi2)

    def co_coverable(self, pi):
        r = self._pattern_rank(pi)
        partners = np.concatenate(
            [self.pattern_ranks(int(rho)) for rho in self.cover_ranks(r)]
        )
        mask = np.zeros(self.n_patterns, dtype=bool)
        mask[partners] = True
        mask[r] = False
        return PermSetBitmap.from_mask(self.n, mask)

    @property
    def cover_degrees(self):
        return np.diff(self.cover_ptr)

    @property
    def pattern_degrees(self):
        return np.diff(self.pattern_ptr)

    @property
    def cover_matrix(self):
        """(n!, n²+1) array of cover ranks; rows are the patterns."""
        if self._cover_matrix is None:
            degrees = self.cover_degrees
            if not np.all(degrees == degrees[0]):
                raise InvalidInputError("cover sets are not uniform in size")
            self._cover_matrix = self.cover_idx.reshape(self.n_patterns, int(degrees[0]))
        return self._cover_matrix

    @property
    def pattern_table(self):
        if self._pattern_table is None:
            self._pattern_table = all_permutations(self.n)
        return self._pattern_table

    def incidence(self):
        """Dense (n_covers, n_patterns) 0/1 matrix."""
        m = np.zeros((self.n_covers, self.n_patterns), dtype=np.int8)
        rows = np.repeat(np.arange(self.n_covers), self.pattern_degrees)
        m[rows, self.pattern_idx] = 1
        return m

    def pattern_label(self, r):
        return format_perm(self.pattern_table[int(r)])

    def cover_label(self, r):
        return format_perm(self.cover_table[int(r)])

    # ─── Pair statistics ───────────────────────────────────
    def pair_cover_counts(self, max_n=None):
        """Ordered pairs (a, b), a != b, with |C_{a,b}| >= 1, and their |C|."""
        max_n = DEFAULTS["pair_max_n"] if max_n is None else max_n
        if self.n > max_n:
            raise ResourceLimitError(
                f"exhaustive pair statistics limited to n <= {max_n} (got n={self.n})",
                limit=max_n,
            )
        if self._pair_counts is None:
            distinct, valid = _distinct_rows(self.deletions)
            width = distinct.shape[1]
            keys = []
            for i in range(width):
                for j in range(width):
                    if i == j:
                        continue
                    both = valid[:, i] & valid[:, j]
                    keys.append(distinct[both, i] * self.n_patterns + distinct[both, j])
            if keys:
                keys, counts = np.unique(np.concatenate(keys), return_counts=True)
            else:
                keys, counts = np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
            a, b = np.divmod(keys, self.n_patterns)
            self._pair_counts = (a, b, counts)
        return self._pair_counts

    # ─── Export ────────────────────────────────────────────
    def to_networkx(self):
        graph = nx.Graph()
        for r in range(self.n_patterns):
            label = self.pattern_label(r)
            graph.add_node(f"p{label}", kind="pattern", level=self.n, label=label)
        for r in range(self.n_covers):
            label = self.cover_label(r)
            graph.add_node(f"c{label}", kind="cover", level=self.n + 1, label=label)
            for pi in self.pattern_ranks(r):
                graph.add_edge(f"c{label}", f"p{self.pattern_label(pi)}")
        return graph

    def __repr__(self):
        return f"CoverageGraph(n={self.n}, patterns={self.n_patterns}, covers={self.n_covers})"


def _distinct_rows(table):
    """Row-sorted copy of `table` plus a mask dropping repeated entries."""
    ordered = np.sort(table, axis=1)
    valid = np.ones(ordered.shape, dtype=bool)
    valid[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    return ordered, valid


def build(n, max_n=None):
    max_n = DEFAULTS["max_n"] if max_n is None else max_n
    if n < 1:
        raise RangeError(f"n={n} must be >= 1")
    if n > max_n:
        raise ResourceLimitError(
            f"n={n} exceeds the configured maximum max_n={max_n}", limit=max_n
        )
    cover_table = all_permutations(n + 1)
    deletions = np.stack(
        [rank_rows(delete_column(cover_table, i)) for i in range(n + 1)], axis=1
    )
    distinct, valid = _distinct_rows(deletions)
    pattern_idx = distinct[valid]
    pattern_counts = valid.sum(axis=1)
    pattern_ptr = np.concatenate([[0], np.cumsum(pattern_counts)])

    rho_ids = np.repeat(np.arange(cover_table.shape[0]), pattern_counts)
    order = np.lexsort((rho_ids, pattern_idx))
    cover_idx = rho_ids[order]
    cover_counts = np.bincount(pattern_idx, minlength=math.factorial(n))
    cover_ptr = np.concatenate([[0], np.cumsum(cover_counts)])
    return CoverageGraph(n, cover_table, deletions, cover_ptr, cover_idx, pattern_ptr, pattern_idx)


def identity_checks(g):
    n = g.n
    succ = (np.abs(np.diff(g.cover_table.astype(np.int64), axis=1)) == 1).sum(axis=1)
    checks = {
        "uniform_cover_degree": bool(np.all(g.cover_degrees == n * n + 1)),
        "succession_identity": bool(np.all(g.pattern_degrees == (n + 1) - succ)),
        "pattern_incidences": int(g.pattern_degrees.sum()),
        "pattern_incidences_expected": math.factorial(n) * (n * n + 1),
        "successions_total": int(succ.sum()),
        "successions_total_expected": 2 * n * math.factorial(n),
    }
    checks["double_count"] = (
        checks["pattern_incidences"] == checks["pattern_incidences_expected"]
        and checks["successions_total"] == checks["successions_total_expected"]
    )
    checks["duality"] = _duality_holds(g)
    return checks


def _duality_holds(g):
    forward = set(
        zip(np.repeat(np.arange(g.n_covers), g.pattern_degrees).tolist(), g.pattern_idx.tolist())
    )
    backward = set(
        zip(g.cover_idx.tolist(), np.repeat(np.arange(g.n_patterns), g.cover_degrees).tolist())
    )
    return forward == backward


# ─── Joint coverage audit ───────────────────────────────────


@dataclass
class JointReport:
    n: int
    max_J: int
    argmax_J: str
    max_C: int
    four_cover_pair_count: int
    four_cover_pairs: list
    adjacent_swap_iff_holds: bool
    readings: dict
    counterexamples: dict
    violations: list = field(default_factory=list)
    sampled: bool = False
    sample_size: int = 0

    def to_dict(self, pair_limit=50):
        data = asdict(self)
        data["four_cover_pairs"] = data["four_cover_pairs"][:pair_limit]
        return data


def swap_partner_keys(g, reading):
    """Keys a*n!+b of ordered pairs related by an adjacent swap under `reading`."""
    table = g.pattern_table
    N = g.n_patterns
    base = np.arange(N, dtype=np.int64)
    keys = []
    for i in range(g.n - 1):
        swapped = table.copy()
        swapped[:, [i, i + 1]] = swapped[:, [i + 1, i]]
        partner = rank_rows(swapped)
        if reading == "positions_and_values":
            keep = np.abs(table[:, i].astype(np.int64) - table[:, i + 1]) == 1
        else:
            keep = np.ones(N, dtype=bool)
        keys.append(base[keep] * N + partner[keep])
    if reading == "positions_or_values":
        for v in range(1, g.n):
            swapped = table.copy()
            swapped[table == v] = v + 1
            swapped[table == v + 1] = v
            keys.append(base * N + rank_rows(swapped))
    if not keys:
        return set()
    return set(np.concatenate(keys).tolist())


def lemma5_audit(g, budget=None):
    budget = DEFAULTS["audit_max_n"] if budget is None else budget
    if g.n > budget:
        raise ResourceLimitError(
            f"exhaustive joint-coverage audit limited to n <= {budget} (got n={g.n}); "
            "use lemma5_sampled_audit",
            limit=budget,
        )
    a, b, c = g.pair_cover_counts(max_n=max(budget, g.n))
    N = g.n_patterns
    j_sizes = np.bincount(a, minlength=N)
    max_J = int(j_sizes.max()) if N else 0
    argmax_J = g.pattern_label(int(np.argmax(j_sizes)))
    max_C = int(c.max()) if c.size else 0

    four = c == 4
    four_keys = set((a[four] * N + b[four]).tolist())
    count_of = dict(zip((a * N + b).tolist(), c.tolist()))
    four_pairs = [
        (g.pattern_label(x), g.pattern_label(y)) for x, y in zip(a[four], b[four])
    ]

    readings, counterexamples = {}, {}
    for reading in READINGS:
        swap_keys = swap_partner_keys(g, reading)
        readings[reading] = swap_keys == four_keys
        found = []
        for key in sorted(four_keys - swap_keys):
            found.append(_counterexample(g, key, count_of, "four_covers_without_swap"))
        for key in sorted(swap_keys - four_keys):
            found.append(_counterexample(g, key, count_of, "swap_without_four_covers"))
        counterexamples[reading] = found[:COUNTEREXAMPLE_CAP]

    violations = []
    if max_C > 4:
        violations.append(f"max |C| = {max_C} exceeds 4")
    if max_J > g.n ** 3:
        violations.append(f"max |J| = {max_J} exceeds n^3 = {g.n ** 3}")
    iff_holds = any(readings.values())
    if not iff_holds:
        violations.append("|C| = 4 pairs match no reading of 'adjacent swap'")

    return JointReport(
        n=g.n,
        max_J=max_J,
        argmax_J=argmax_J,
        max_C=max_C,
        four_cover_pair_count=len(four_keys),
        four_cover_pairs=four_pairs,
        adjacent_swap_iff_holds=iff_holds,
        readings=readings,
        counterexamples=counterexamples,
        violations=violations,
    )


def _counterexample(g, key, count_of, kind):
    x, y = divmod(key, g.n_patterns)
    return {
        "pi": g.pattern_label(x),
        "pi2": g.pattern_label(y),
        "C": int(count_of.get(key, 0)),
        "kind": kind,
    }


def lemma5_sampled_audit(g, pairs, seed):
    """Uniform random ordered pairs (pi != pi2); |C| by sorted-row intersection."""
    if g.n < 2:
        return lemma5_audit(g)
    rng = np.random.default_rng(seed)
    N = g.n_patterns
    a = rng.integers(0, N, size=pairs)
    b = (a + rng.integers(1, N, size=pairs)) % N
    matrix = g.cover_matrix
    c = np.array(
        [np.intersect1d(matrix[x], matrix[y], assume_unique=True).size for x, y in zip(a, b)],
        dtype=np.int64,
    )
    keys = a * N + b
    readings, counterexamples = {}, {}
    count_of = dict(zip(keys.tolist(), c.tolist()))
    for reading in READINGS:
        swap_keys = swap_partner_keys(g, reading)
        bad = [k for k, cc in count_of.items() if (cc == 4) != (k in swap_keys)]
        readings[reading] = not bad
        counterexamples[reading] = [
            _counterexample(
                g, k, count_of,
                "four_covers_without_swap" if count_of[k] == 4 else "swap_without_four_covers",
            )
            for k in sorted(bad)[:COUNTEREXAMPLE_CAP]
        ]
    max_C = int(c.max()) if c.size else 0
    violations = [f"max |C| = {max_C} exceeds 4"] if max_C > 4 else []
    iff_holds = any(readings.values())
    if not iff_holds:
        violations.append("|C| = 4 pairs match no reading of 'adjacent swap'")
    four = c == 4
    return JointReport(
        n=g.n,
        max_J=0,
        argmax_J="",
        max_C=max_C,
        four_cover_pair_count=int(np.unique(keys[four]).size),
        four_cover_pairs=[(g.pattern_label(x), g.pattern_label(y)) for x, y in zip(a[four], b[four])],
        adjacent_swap_iff_holds=iff_holds,
        readings=readings,
        counterexamples=counterexamples,
        violations=violations,
        sampled=True,
        sample_size=int(pairs),
    )
