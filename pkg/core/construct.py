"""Covers of S_n by subsets of S_{n+1}: verification, analytic bounds and
constructions (greedy, alteration, lambda-cover, branch-and-bound, CP-SAT).

log is the natural logarithm throughout.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from core.bitmaps import PermSetBitmap
from core.errors import InvalidInputError, RangeError, ResourceLimitError
from core.perms import Permutation, rank, rank_rows, symmetry_rows

STATUSES = ("optimal", "feasible", "infeasible-budget")
METHODS = ("exact", "greedy", "alteration", "lambda-sample", "external")


@dataclass
class CoverCertificate:
    n: int
    lam: int
    selected: PermSetBitmap
    status: str
    lower_bound: int
    method: str
    seed: object = None
    wall_time: float = 0.0
    draws: int = None
    notes: list = field(default_factory=list)

    @property
    def size(self):
        return self.selected.cardinality()

    def to_dict(self):
        return {
            "n": self.n,
            "lambda": self.lam,
            "method": self.method,
            "status": self.status,
            "size": self.size,
            "lower_bound": int(self.lower_bound),
            "selected": self.selected.labels(),
            "seed": self.seed,
            "wall_time_ms": round(self.wall_time * 1000.0, 3),
            "draws": self.draws,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            n = int(data["n"])
            ranks = [rank(Permutation.parse(s)).r for s in data["selected"]]
            if any(len(Permutation.parse(s)) != n + 1 for s in data["selected"]):
                raise InvalidInputError("selected permutations must have length n+1")
            return cls(
                n=n,
                lam=int(data["lambda"]),
                selected=PermSetBitmap.from_ranks(n + 1, ranks),
                status=data["status"],
                lower_bound=int(data["lower_bound"]),
                method=data["method"],
                seed=data.get("seed"),
                wall_time=float(data.get("wall_time_ms", 0.0)) / 1000.0,
                draws=data.get("draws"),
                notes=list(data.get("notes", [])),
            )
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed certificate: {e}")


@dataclass
class VerificationResult:
    ok: bool
    deficient: list

    def labelled(self, g):
        return [(g.pattern_label(r), count) for r, count in self.deficient]


def coverage_counts(g, mask):
    return mask[g.cover_matrix].sum(axis=1)


def verify_cover(g, sel, lam=1):
    if not isinstance(sel, PermSetBitmap) or sel.level != g.n + 1:
        raise InvalidInputError(
            f"selection must be a bitmap over S_{g.n + 1}, got "
            f"S_{getattr(sel, 'level', '?')}"
        )
    counts = coverage_counts(g, sel.to_mask())
    short = np.flatnonzero(counts < lam)
    return VerificationResult(
        ok=short.size == 0,
        deficient=[(int(r), int(counts[r])) for r in short],
    )


def _check_lambda(g, lam):
    if lam < 1:
        raise InvalidInputError(f"multiplicity lambda={lam} must be >= 1")
    if lam > g.n * g.n + 1:
        raise InvalidInputError(
            f"lambda={lam} exceeds n^2+1={g.n * g.n + 1}, the number of covers of any pattern"
        )


# ─── Analytic bounds ───────────────────────────────────────


def pigeonhole_lower(n, lam=1):
    return -(-lam * math.factorial(n) // (n + 1))


def pigeonhole_lower_real(n):
    return math.factorial(n + 1) / n**2 * (1 - (2 * n + 1) / (n + 1) ** 2)


def thm2_upper(n):
    c = n * n + 1
    return math.factorial(n + 1) / c * (1 + math.log(c / (n + 1)))


def thm2_upper_statement(n):
    return math.log(n) / n**2 * math.factorial(n + 1)


def alteration_optimal_Y(n):
    c = n * n + 1
    return max(0.0, math.factorial(n + 1) / c * math.log(c / (n + 1)))


def alteration_size_bound(n, Y):
    N = math.factorial(n + 1)
    return Y + math.factorial(n) * math.exp(-Y * (n * n + 1) / N)


def expected_uncovered_wor(n, Y):
    N = math.factorial(n + 1)
    c = n * n + 1
    if not 0 <= Y <= N:
        raise RangeError(f"Y={Y} outside 0..{N}")
    if Y > N - c:
        return 0.0
    log_ratio = (
        gammaln(N - c + 1) - gammaln(N - c - Y + 1) - gammaln(N + 1) + gammaln(N - Y + 1)
    )
    return math.factorial(n) * math.exp(log_ratio)


def _check_thm3(n, lam):
    if n < 3:
        raise InvalidInputError(f"n={n}: log log n <= 0, the lambda-cover bound needs n >= 3")
    if lam < 2:
        raise InvalidInputError(f"lambda={lam}: the lambda-cover bound needs lambda >= 2")


def lambda_default_Y(n, lam):
    _check_thm3(n, lam)
    scale = math.factorial(n + 1) / (n * n + 1)
    return int(round(scale * (math.log(n) + (lam - 1) * math.log(math.log(n)))))


def thm3_upper(n, lam):
    """Explicit form of the lambda-cover bound, with lam/(lam-1)! standing in for the O(1) term."""
    _check_thm3(n, lam)
    scale = math.factorial(n + 1) / (n * n + 1)
    return scale * (
        math.log(n) + (lam - 1) * math.log(math.log(n)) + lam / math.factorial(lam - 1)
    )


def expected_lambda_cover_size(n, lam, Y):
    p = (n * n + 1) / math.factorial(n + 1)
    j = np.arange(lam)
    return float(Y + math.factorial(n) * np.sum((lam - j) * binom.pmf(j, Y, p)))


@dataclass
class BoundTable:
    n: int
    lam: int
    pigeonhole_lower: int
    pigeonhole_lower_real: float
    thm2_upper: float
    thm2_upper_statement: float
    thm3_upper: float
    alteration_optimal_Y: float

    def expected_uncovered_wor(self, Y):
        return expected_uncovered_wor(self.n, Y)

    def to_dict(self):
        return {
            "n": self.n,
            "lambda": self.lam,
            "pigeonhole_lower": self.pigeonhole_lower,
            "pigeonhole_lower_real": self.pigeonhole_lower_real,
            "thm2_upper": self.thm2_upper,
            "thm2_upper_statement": self.thm2_upper_statement,
            "thm3_upper": self.thm3_upper,
            "alteration_optimal_Y": self.alteration_optimal_Y,
        }


def bound_table(n, lam=1):
    return BoundTable(
        n=n,
        lam=lam,
        pigeonhole_lower=pigeonhole_lower(n, lam),
        pigeonhole_lower_real=pigeonhole_lower_real(n),
        thm2_upper=thm2_upper(n),
        thm2_upper_statement=thm2_upper_statement(n) if n >= 2 else None,
        thm3_upper=thm3_upper(n, lam) if n >= 3 and lam >= 2 else None,
        alteration_optimal_Y=alteration_optimal_Y(n),
    )


# ─── Constructions ─────────────────────────────────────────


def _residual_gains(g, deficient):
    return np.add.reduceat(deficient[g.pattern_idx].astype(np.int64), g.pattern_ptr[:-1])


def greedy_cover(g, lam=1):
    _check_lambda(g, lam)
    start = time.perf_counter()
    need = np.full(g.n_patterns, lam, dtype=np.int64)
    selected = np.zeros(g.n_covers, dtype=bool)
    while need.any():
        gains = _residual_gains(g, need > 0)
        gains[selected] = -1
        best = int(np.argmax(gains))
        if gains[best] <= 0:
            break
        selected[best] = True
        hit = g.pattern_ranks(best)
        need[hit] = np.maximum(need[hit] - 1, 0)
    return CoverCertificate(
        n=g.n,
        lam=lam,
        selected=PermSetBitmap.from_mask(g.n + 1, selected),
        status="feasible",
        lower_bound=pigeonhole_lower(g.n, lam),
        method="greedy",
        wall_time=time.perf_counter() - start,
    )


def _patch(g, selected, lam):
    """Top up every pattern to `lam` covers, lowest-rank covers first."""
    matrix = g.cover_matrix
    for r in range(g.n_patterns):
        row = matrix[r]
        missing = lam - int(selected[row].sum())
        if missing > 0:
            free = row[~selected[row]]
            selected[free[:missing]] = True


def alteration_cover(g, seed, Y=None):
    start = time.perf_counter()
    if Y is None:
        Y = int(round(alteration_optimal_Y(g.n)))
    if not 0 <= Y <= g.n_covers:
        raise RangeError(f"Y={Y} outside 0..{g.n_covers}")
    rng = np.random.default_rng(seed)
    selected = np.zeros(g.n_covers, dtype=bool)
    selected[rng.choice(g.n_covers, size=Y, replace=False)] = True
    _patch(g, selected, 1)
    return CoverCertificate(
        n=g.n,
        lam=1,
        selected=PermSetBitmap.from_mask(g.n + 1, selected),
        status="feasible",
        lower_bound=pigeonhole_lower(g.n, 1),
        method="alteration",
        seed=seed,
        wall_time=time.perf_counter() - start,
        draws=Y,
    )


def lambda_cover(g, lam, seed, Y=None):
    if lam < 2:
        raise InvalidInputError(
            f"lambda={lam}: use alteration_cover or greedy_cover for single covers"
        )
    _check_lambda(g, lam)
    start = time.perf_counter()
    if Y is None:
        Y = lambda_default_Y(g.n, lam)
    rng = np.random.default_rng(seed)
    selected = np.zeros(g.n_covers, dtype=bool)
    selected[rng.integers(0, g.n_covers, size=Y)] = True
    _patch(g, selected, lam)
    return CoverCertificate(
        n=g.n,
        lam=lam,
        selected=PermSetBitmap.from_mask(g.n + 1, selected),
        status="feasible",
        lower_bound=pigeonhole_lower(g.n, lam),
        method="lambda-sample",
        seed=seed,
        wall_time=time.perf_counter() - start,
        draws=Y,
        notes=[f"{Y} draws with replacement collapsed to a set before patching"],
    )


def symmetric_cover(g, sel, op="reverse"):
    ranks = sel.to_ranks()
    if ranks.size == 0:
        return PermSetBitmap(g.n + 1)
    images = rank_rows(symmetry_rows(g.cover_table[ranks], op))
    return PermSetBitmap.from_ranks(g.n + 1, images)


# ─── Exact branch-and-bound ────────────────────────────────


class BranchingStrategy:
    """Picks the pattern to branch on. `need` is the residual deficiency."""

    name = "base"

    def choose(self, g, need, available):
        raise NotImplementedError


class LowestRankMostDeficient(BranchingStrategy):
    name = "lowest-rank-most-deficient"

    def choose(self, g, need, available):
        return int(np.argmax(need))


class FewestCandidates(BranchingStrategy):
    name = "fewest-candidates"

    def choose(self, g, need, available):
        candidates = available[g.cover_matrix].sum(axis=1)
        candidates = np.where(need > 0, candidates, np.iinfo(np.int64).max)
        return int(np.argmin(candidates))


class _BudgetExhausted(Exception):
    pass


class _Search:
    def __init__(self, g, lam, deadline, strategy):
        self.g = g
        self.lam = lam
        self.deadline = deadline
        self.strategy = strategy
        self.need = np.full(g.n_patterns, lam, dtype=np.int64)
        self.selected = np.zeros(g.n_covers, dtype=bool)
        self.available = np.ones(g.n_covers, dtype=bool)
        self.best_size = None
        self.best = None
        self.nodes = 0

    def bound(self, size):
        gains = _residual_gains(self.g, self.need > 0)
        gains[~self.available] = 0
        top = int(gains.max())
        if top == 0:
            return None
        return size + -(-int(self.need.sum()) // top)

    def run(self, size=0):
        self.nodes += 1
        if self.nodes % 256 == 0 and time.perf_counter() > self.deadline:
            raise _BudgetExhausted()
        if not self.need.any():
            if self.best_size is None or size < self.best_size:
                self.best_size = size
                self.best = self.selected.copy()
            return
        bound = self.bound(size)
        if bound is None or (self.best_size is not None and bound >= self.best_size):
            return
        pi = self.strategy.choose(self.g, self.need, self.available)
        row = self.g.cover_matrix[pi]
        candidates = row[self.available[row]]
        closed = []
        for rho in candidates:
            hit = self.g.pattern_ranks(int(rho))
            hit = hit[self.need[hit] > 0]
            self.selected[rho] = True
            self.available[rho] = False
            self.need[hit] -= 1
            self.run(size + 1)
            self.need[hit] += 1
            self.selected[rho] = False
            closed.append(rho)
        self.available[closed] = True


def exact_min_cover(g, lam=1, time_budget=60.0, strategy=None):
    if time_budget <= 0:
        raise InvalidInputError("time budget must be positive")
    _check_lambda(g, lam)
    start = time.perf_counter()
    strategy = strategy or LowestRankMostDeficient()
    incumbent = greedy_cover(g, lam)

    search = _Search(g, lam, start + time_budget, strategy)
    search.best_size = incumbent.size
    search.best = incumbent.selected.to_mask()
    root = search.bound(0) or 0
    lower = max(pigeonhole_lower(g.n, lam), root)

    status = "optimal"
    try:
        search.run()
    except _BudgetExhausted:
        status = "feasible"
    if status == "optimal":
        lower = search.best_size
    return CoverCertificate(
        n=g.n,
        lam=lam,
        selected=PermSetBitmap.from_mask(g.n + 1, search.best),
        status=status,
        lower_bound=lower,
        method="exact",
        wall_time=time.perf_counter() - start,
        notes=[
            f"strategy={strategy.name}",
            f"nodes={search.nodes}",
            "single-threaded search; witness is deterministic",
        ],
    )


def external_min_cover(g, lam=1, time_budget=60.0):
    try:
        from ortools.sat.python import cp_model
    except ImportError:
        raise ResourceLimitError("method 'external' needs ortools (pip install ortools)")
    _check_lambda(g, lam)
    start = time.perf_counter()
    model = cp_model.CpModel()
    x = [model.NewBoolVar(f"x{r}") for r in range(g.n_covers)]
    for row in g.cover_matrix:
        model.Add(sum(x[int(r)] for r in row) >= lam)
    model.Minimize(sum(x))
    solver = cp_model.CpSolver()
    solver.parameters.max_time_in_seconds = float(time_budget)
    solver.parameters.num_search_workers = 1
    solver.parameters.random_seed = 0
    result = solver.Solve(model)
    if result not in (cp_model.OPTIMAL, cp_model.FEASIBLE):
        return CoverCertificate(
            n=g.n,
            lam=lam,
            selected=PermSetBitmap(g.n + 1),
            status="infeasible-budget",
            lower_bound=pigeonhole_lower(g.n, lam),
            method="external",
            wall_time=time.perf_counter() - start,
        )
    mask = np.array([solver.BooleanValue(v) for v in x], dtype=bool)
    optimal = result == cp_model.OPTIMAL
    lower = int(mask.sum()) if optimal else max(
        pigeonhole_lower(g.n, lam), math.ceil(solver.BestObjectiveBound() - 1e-9)
    )
    return CoverCertificate(
        n=g.n,
        lam=lam,
        selected=PermSetBitmap.from_mask(g.n + 1, mask),
        status="optimal" if optimal else "feasible",
        lower_bound=lower,
        method="external",
        wall_time=time.perf_counter() - start,
        notes=["CP-SAT, one search worker"],
    )
