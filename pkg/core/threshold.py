"""Monte Carlo engine for the Bernoulli-p ensemble over S_{n+1}.

Each rank of S_{n+1} is selected independently with probability p. Two
samplers realise that law:

* ``binomial`` (default): draw K ~ Binomial((n+1)!, p), then a uniform
  K-subset. Equivalent in law to independent coin flips and cheaper at small p.
* ``bernoulli``: one uniform per rank, selected when U < p. Used by the
  threshold sweep, where one vector of uniforms per trial serves every grid
  point (a monotone coupling across p).

Trial i always draws from its own Philox stream keyed by (master_seed, i), so
every report is bit-identical for any worker count and chunking.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln
from scipy.stats import norm, poisson

from core.bitmaps import PermSetBitmap
from core.errors import InvalidInputError, RangeError, ResourceLimitError

SAMPLERS = ("binomial", "bernoulli")
POISSON_TAIL = 1e-12
EXACT_ENUMERATION_MAX_COVERS = 20


@dataclass(frozen=True)
class TrialConfig:
    n: int
    p: float
    trials: int
    master_seed: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise RangeError(f"p={self.p} outside [0, 1]")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")


def trial_rng(master_seed, trial_index):
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.Philox(seq))


def _sample_mask(size, p, rng, sampler="binomial"):
    if sampler == "bernoulli":
        return rng.random(size) < p
    if sampler != "binomial":
        raise InvalidInputError(f"unknown sampler '{sampler}', expected one of {SAMPLERS}")
    mask = np.zeros(size, dtype=bool)
    k = int(rng.binomial(size, p))
    if k:
        mask[rng.choice(size, size=k, replace=False)] = True
    return mask


def sample_selection(n, p, trial_rng, sampler="binomial"):
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"p={p} outside [0, 1]")
    return PermSetBitmap.from_mask(
        n + 1, _sample_mask(math.factorial(n + 1), p, trial_rng, sampler)
    )


def count_uncovered(g, sel):
    if not isinstance(sel, PermSetBitmap) or sel.level != g.n + 1:
        raise InvalidInputError(
            f"selection must be a bitmap over S_{g.n + 1}, got S_{getattr(sel, 'level', '?')}"
        )
    return _uncovered(g.cover_matrix, sel.to_mask())


def _uncovered(cover_matrix, mask):
    return int(cover_matrix.shape[0] - mask[cover_matrix].any(axis=1).sum())


# ─── Exact moments ─────────────────────────────────────────


def exact_mean(n, p):
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"p={p} outside [0, 1]")
    if p == 1.0:
        return 0.0
    return float(math.exp(gammaln(n + 1) + (n * n + 1) * math.log1p(-p)))


def exact_variance(g, p, max_n=None):
    """V(X) from the joint-coverage pair statistics of the graph.

    Pairs with disjoint cover sets are independent and contribute nothing, so
    only co-coverable ordered pairs enter the covariance sum.
    """
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"p={p} outside [0, 1]")
    _, _, shared = g.pair_cover_counts(max_n=max_n)
    c = g.n * g.n + 1
    q = (1.0 - p) ** c
    diagonal = g.n_patterns * (q - q * q)
    joint = np.power(1.0 - p, 2 * c - shared.astype(np.float64))
    return float(diagonal + np.sum(joint - q * q))


@dataclass
class SteinChen:
    raw: float
    bound: float
    sharp: float


def stein_chen_bound(g, p, max_n=None):
    """V/lambda - 1 + 2(1-p)^(n^2+1), plus the unrelaxed (1-e^-l)/l form."""
    lam = exact_mean(g.n, p)
    var = exact_variance(g, p, max_n=max_n)
    q = (1.0 - p) ** (g.n * g.n + 1)
    if lam == 0.0:
        raw, sharp = 2 * q, 0.0
    else:
        raw = var / lam - 1 + 2 * q
        sharp = (-math.expm1(-lam) / lam) * (var - lam + 2 * g.n_patterns * q * q)
    return SteinChen(raw=raw, bound=max(raw, 0.0), sharp=max(sharp, 0.0))


def exact_distribution(g, p):
    """Law of X by enumerating every subset of S_{n+1}, probability-weighted."""
    size = g.n_covers
    if size > EXACT_ENUMERATION_MAX_COVERS:
        raise ResourceLimitError(
            f"exact enumeration needs (n+1)! <= {EXACT_ENUMERATION_MAX_COVERS}",
            limit=EXACT_ENUMERATION_MAX_COVERS,
        )
    subsets = np.arange(2**size, dtype=np.int64)
    masks = ((subsets[:, None] >> np.arange(size)) & 1).astype(bool)
    covered = masks[:, g.cover_matrix].any(axis=2).sum(axis=1)
    uncovered = g.n_patterns - covered
    picked = masks.sum(axis=1)
    weights = p**picked * (1.0 - p) ** (size - picked)
    pmf = np.bincount(uncovered, weights=weights, minlength=g.n_patterns + 1)
    return {int(k): float(w) for k, w in enumerate(pmf) if w > 0}


# ─── Closed forms ──────────────────────────────────────────


def threshold_boundaries(n, omega):
    if n < 2 or omega <= 0:
        raise InvalidInputError("threshold boundaries need n >= 2 and omega > 0")
    log_n = math.log(n)
    p_zero = (log_n - 1 + 0.5 * log_n / n - omega / n) / n
    p_one = log_n / n - 1 / n + log_n / (2 * n * n) + omega / (n * n)
    return p_zero, p_one


def gap_p_paper(n, K):
    log_n = math.log(n)
    p = (log_n - 1 + 0.5 * log_n / n - K / n) / n
    if not 0.0 < p < 1.0:
        raise RangeError(f"p(n={n}, K={K}) = {p} outside (0, 1)")
    return p


def p_for_mean(n, lambda_target):
    top = math.factorial(n)
    if not 0.0 < lambda_target <= top:
        raise RangeError(f"target mean {lambda_target} outside (0, {top}]")
    if lambda_target == top:
        return 0.0
    c = n * n + 1
    log_target = math.log(lambda_target)

    def gap(p):
        return gammaln(n + 1) + c * math.log1p(-p) - log_target

    return float(brentq(gap, 0.0, 1.0 - 1e-15, xtol=1e-12))


def asymptotic_mean_ratios(n, K, p):
    lam = exact_mean(n, p)
    root = math.sqrt(2 * math.pi)
    return {
        "mean_over_root2pi_exp_minus_K": lam / (root * math.exp(-K)),
        "mean_over_root2pi_exp_plus_K": lam / (root * math.exp(K)),
    }


# ─── Distributions ─────────────────────────────────────────


def poisson_pmf(lam, k_max=None):
    """Truncated Po(lam) pmf over 0..k_max and the discarded tail mass."""
    if lam < 0:
        raise RangeError(f"Poisson mean {lam} must be >= 0")
    if lam == 0:
        return np.ones(1), 0.0
    if k_max is None:
        k_max = int(poisson.isf(POISSON_TAIL, lam))
        while poisson.sf(k_max, lam) >= POISSON_TAIL:
            k_max += 1
    pmf = poisson.pmf(np.arange(k_max + 1), lam)
    return pmf, float(poisson.sf(k_max, lam))


def _as_pmf(pmf):
    if isinstance(pmf, dict):
        return {int(k): float(v) for k, v in pmf.items()}
    return {k: float(v) for k, v in enumerate(np.asarray(pmf, dtype=float))}


def tv_distance(pmf_a, pmf_b):
    a, b = _as_pmf(pmf_a), _as_pmf(pmf_b)
    for name, pmf in (("first", a), ("second", b)):
        if any(v < 0 for v in pmf.values()):
            raise InvalidInputError(f"{name} pmf has negative mass")
        if abs(sum(pmf.values()) - 1.0) > 1e-9:
            raise InvalidInputError(f"{name} pmf sums to {sum(pmf.values())}, not 1")
    support = set(a) | set(b)
    tv = 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in support)
    return min(max(tv, 0.0), 1.0)


def wilson_interval(successes, trials, confidence=0.95):
    if trials <= 0:
        raise InvalidInputError("trials must be >= 1")
    z = norm.ppf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# ─── Trial engine ──────────────────────────────────────────


def _trial_chunk(start, stop, cover_matrix, n_covers, p, master_seed, sampler):
    out = np.empty(stop - start, dtype=np.int64)
    for i in range(start, stop):
        mask = _sample_mask(n_covers, p, trial_rng(master_seed, i), sampler)
        out[i - start] = _uncovered(cover_matrix, mask)
    return out


def _sweep_chunk(start, stop, cover_matrix, n_covers, grid, master_seed):
    out = np.empty((len(grid), stop - start), dtype=np.int64)
    for i in range(start, stop):
        uniforms = trial_rng(master_seed, i).random(n_covers)
        for j, p in enumerate(grid):
            out[j, i - start] = _uncovered(cover_matrix, uniforms < p)
    return out


def _chunks(trials, workers):
    pieces = max(1, min(trials, workers * 4))
    edges = np.linspace(0, trials, pieces + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _map_chunks(fn, args, trials, workers, axis=0):
    chunks = _chunks(trials, workers)
    if workers <= 1:
        parts = [fn(a, b, *args) for a, b in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, a, b, *args) for a, b in chunks]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=axis)


def run_trials(g, p, trials, master_seed, workers=1, sampler="binomial"):
    """Uncovered count X for trials 0..trials-1, in trial order."""
    TrialConfig(g.n, p, trials, master_seed)
    return _map_chunks(
        _trial_chunk, (g.cover_matrix, g.n_covers, p, master_seed, sampler), trials, workers
    )


@dataclass
class CoverEstimate:
    p: float
    covers: int
    trials: int
    phat: float
    ci_lo: float
    ci_hi: float
    lambda_exact: float

    def to_row(self):
        return asdict(self)


def _estimate(n, p, uncovered):
    trials = int(uncovered.size)
    covers = int(np.count_nonzero(uncovered == 0))
    if p in (0.0, 1.0):
        lo = hi = covers / trials
    else:
        lo, hi = wilson_interval(covers, trials)
    return CoverEstimate(p, covers, trials, covers / trials, lo, hi, exact_mean(n, p))


def mc_cover_probability(g, p, trials, master_seed, workers=1, sampler="binomial"):
    return _estimate(g.n, p, run_trials(g, p, trials, master_seed, workers, sampler))


@dataclass
class SweepReport:
    n: int
    rows: list
    boundaries: dict = field(default_factory=dict)

    COLUMNS = ("p", "covers", "trials", "phat", "ci_lo", "ci_hi", "lambda_exact")

    def csv_rows(self):
        return [[getattr(row, c) for c in self.COLUMNS] for row in self.rows]


def threshold_sweep(g, p_grid, trials, master_seed, workers=1, omega=None):
    grid = [float(p) for p in p_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidInputError("p grid must be sorted ascending")
    for p in grid:
        TrialConfig(g.n, p, trials, master_seed)
    table = _map_chunks(
        _sweep_chunk, (g.cover_matrix, g.n_covers, grid, master_seed), trials, workers, axis=1
    )
    rows = [_estimate(g.n, p, table[j]) for j, p in enumerate(grid)]
    boundaries = {}
    if g.n >= 2:
        for w in ([omega] if omega else [1.0, 2.0]):
            p_zero, p_one = threshold_boundaries(g.n, w)
            boundaries[f"omega={w:g}"] = {"p_zero": p_zero, "p_one": p_one}
    return SweepReport(n=g.n, rows=rows, boundaries=boundaries)


@dataclass
class GapReport:
    n: int
    p: float
    trials: int
    master_seed: int
    K_nominal: float
    lambda_exact: float
    empirical_pmf: dict
    empirical_mean: float
    empirical_variance: float
    exact_variance: float
    tv_to_poisson: float
    tv_standard_error: float
    poisson_tail_mass: float
    cover_probability: float
    cover_ci: tuple
    stein_chen_bound: float
    stein_chen_raw: float
    stein_chen_sharp: float
    ratios: dict
    small_sample: bool
    warnings: list

    def to_dict(self):
        data = asdict(self)
        data["empirical_pmf"] = {str(k): v for k, v in sorted(self.empirical_pmf.items())}
        data["cover_ci"] = list(self.cover_ci)
        return data


def empirical_pmf(samples):
    values, counts = np.unique(np.asarray(samples), return_counts=True)
    total = counts.sum()
    return {int(v): float(c / total) for v, c in zip(values, counts)}


def gap_experiment(g, p, trials, master_seed, workers=1, K=None, pair_max_n=None,
                   sampler="binomial"):
    uncovered = run_trials(g, p, trials, master_seed, workers, sampler)
    pmf = empirical_pmf(uncovered)
    lam = exact_mean(g.n, p)
    k_max = max(max(pmf), 0)
    reference, tail = poisson_pmf(lam)
    if reference.size <= k_max:
        reference, tail = poisson_pmf(lam, k_max)
    tv = min(1.0, tv_distance(pmf, reference) + tail)
    freqs = np.array(list(pmf.values()))
    tv_se = 0.5 * math.sqrt(float(np.sum(freqs * (1 - freqs))) / trials)

    warnings = []
    small = trials < 1000
    if small:
        warnings.append(f"only {trials} trials; TV estimate is noisy below 1000")
    exact_var = sc = None
    try:
        exact_var = exact_variance(g, p, max_n=pair_max_n)
        sc = stein_chen_bound(g, p, max_n=pair_max_n)
    except ResourceLimitError as e:
        warnings.append(f"Stein-Chen bound skipped: {e}")

    estimate = _estimate(g.n, p, uncovered)
    return GapReport(
        n=g.n,
        p=p,
        trials=trials,
        master_seed=master_seed,
        K_nominal=K,
        lambda_exact=lam,
        empirical_pmf=pmf,
        empirical_mean=float(uncovered.mean()),
        empirical_variance=float(uncovered.var(ddof=1)) if trials > 1 else 0.0,
        exact_variance=exact_var,
        tv_to_poisson=tv,
        tv_standard_error=tv_se,
        poisson_tail_mass=tail,
        cover_probability=estimate.phat,
        cover_ci=(estimate.ci_lo, estimate.ci_hi),
        stein_chen_bound=sc.bound if sc else None,
        stein_chen_raw=sc.raw if sc else None,
        stein_chen_sharp=sc.sharp if sc else None,
        ratios=asymptotic_mean_ratios(g.n, K, p) if K is not None else {},
        small_sample=small,
        warnings=warnings,
    )


def uncovered_marginal(g, p, pi, trials, master_seed):
    row = g.cover_ranks(pi)
    hits = 0
    for i in range(trials):
        mask = _sample_mask(g.n_covers, p, trial_rng(master_seed, i))
        hits += not mask[row].any()
    return hits / trials
