import math

import numpy as np
import pytest

from core.bitmaps import PermSetBitmap
from core.construct import verify_cover
from core.errors import InvalidInputError, RangeError, ResourceLimitError
from core.perms import rank
from core.threshold import (
    asymptotic_mean_ratios,
    count_uncovered,
    empirical_pmf,
    exact_distribution,
    exact_mean,
    exact_variance,
    gap_experiment,
    gap_p_paper,
    mc_cover_probability,
    p_for_mean,
    poisson_pmf,
    run_trials,
    sample_selection,
    stein_chen_bound,
    threshold_boundaries,
    threshold_sweep,
    trial_rng,
    tv_distance,
    uncovered_marginal,
    wilson_interval,
)


def test_sample_selection_extremes():
    assert sample_selection(3, 0.0, trial_rng(0, 0)).cardinality() == 0
    assert sample_selection(3, 1.0, trial_rng(0, 0)).cardinality() == 24
    with pytest.raises(RangeError):
        sample_selection(3, 1.5, trial_rng(0, 0))


@pytest.mark.parametrize("sampler", ["binomial", "bernoulli"])
def test_sample_selection_mean(sampler):
    sizes = np.array([
        sample_selection(3, 0.5, trial_rng(1, i), sampler).cardinality() for i in range(10_000)
    ])
    # Binomial(24, 1/2): sd of the mean is sqrt(6) / 100
    assert abs(sizes.mean() - 12) < 4 * math.sqrt(6) / 100


def test_trial_streams_are_independent_of_order():
    a = trial_rng(5, 17).random(4)
    trial_rng(5, 3).random(100)
    b = trial_rng(5, 17).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, trial_rng(5, 18).random(4))


def test_count_uncovered(g3):
    assert count_uncovered(g3, PermSetBitmap(4)) == 6
    assert count_uncovered(g3, PermSetBitmap.full(4)) == 0
    known = PermSetBitmap.from_ranks(4, [rank("1342").r, rank("4213").r])
    assert count_uncovered(g3, known) == 0
    with pytest.raises(InvalidInputError):
        count_uncovered(g3, PermSetBitmap(3))


def test_exact_mean():
    assert exact_mean(3, 0.0) == pytest.approx(6)
    assert exact_mean(5, 1.0) == 0
    assert exact_mean(6, 0.1) == pytest.approx(720 * 0.9**37)
    assert exact_mean(6, 0.1) == pytest.approx(14.60, abs=0.01)


def test_exact_variance_degenerate(g3):
    assert exact_variance(g3, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert exact_variance(g3, 1.0) == 0.0


@pytest.mark.parametrize("p", [0.1, 0.3, 0.7])
def test_exact_moments_match_enumeration_n2(graphs, p):
    g = graphs(2)
    pmf = exact_distribution(g, p)
    assert sum(pmf.values()) == pytest.approx(1.0)
    mean = sum(k * w for k, w in pmf.items())
    var = sum(k * k * w for k, w in pmf.items()) - mean**2
    assert mean == pytest.approx(exact_mean(2, p))
    assert var == pytest.approx(exact_variance(g, p))


def test_exact_distribution_limit(g3):
    with pytest.raises(ResourceLimitError):
        exact_distribution(g3, 0.1)


def test_exact_variance_against_monte_carlo_n3(g3):
    p = 0.1
    x = run_trials(g3, p, 20_000, master_seed=2)
    var = exact_variance(g3, p)
    # sample variance of X in 0..6 has sd well under 0.1 at this size
    assert abs(x.var(ddof=1) - var) < 0.15
    assert abs(x.mean() - exact_mean(3, p)) < 4 * math.sqrt(var / x.size)


def test_stein_chen(g3, graphs):
    sc = stein_chen_bound(g3, 0.999999)
    assert sc.bound == pytest.approx(0.0, abs=1e-6)
    sc6 = stein_chen_bound(graphs(6), 0.15)
    assert sc6.raw >= -1e-9
    assert sc6.bound >= 0 and sc6.sharp >= 0


def test_threshold_boundaries():
    p_zero, p_one = threshold_boundaries(7, 1.0)
    assert p_zero == pytest.approx(0.13458, abs=5e-5)
    assert p_one == pytest.approx(math.log(7) / 7 - 1 / 7 + math.log(7) / 98 + 1 / 49)
    assert p_zero < p_one
    ratios = [threshold_boundaries(n, 1.0)[1] / (math.log(n) / n) for n in (10, 100, 1000)]
    assert abs(ratios[2] - 1) < abs(ratios[0] - 1)
    with pytest.raises(InvalidInputError):
        threshold_boundaries(1, 1.0)


def test_gap_p_paper():
    assert gap_p_paper(7, 0) == pytest.approx(0.154986, abs=1e-6)
    assert gap_p_paper(8, 0) == pytest.approx(0.15118, abs=1e-4)
    values = [gap_p_paper(7, k) for k in (-1, 0, 1, 2)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_p_for_mean():
    assert p_for_mean(5, 120) == 0.0
    assert p_for_mean(7, 1.0) == pytest.approx(1 - (1 / 5040) ** (1 / 50), abs=1e-9)
    assert p_for_mean(7, 1.0) == pytest.approx(0.15676, abs=1e-5)
    for n in (5, 6, 7):
        for target in (0.1, 1.0, 10.0):
            assert exact_mean(n, p_for_mean(n, target)) == pytest.approx(target, rel=1e-9)
    with pytest.raises(RangeError):
        p_for_mean(3, 7)


def test_asymptotic_ratios_are_reported():
    p = gap_p_paper(7, 0.5)
    ratios = asymptotic_mean_ratios(7, 0.5, p)
    assert ratios["mean_over_root2pi_exp_minus_K"] > 0


def test_poisson_pmf():
    pmf, tail = poisson_pmf(0)
    assert list(pmf) == [1.0] and tail == 0.0
    pmf, _ = poisson_pmf(1.0)
    assert pmf[0] == pytest.approx(math.exp(-1))
    for lam in (0.1, 1.0, 14.6):
        pmf, tail = poisson_pmf(lam)
        assert pmf.sum() + tail == pytest.approx(1.0, abs=1e-12)


def test_tv_distance():
    assert tv_distance({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0
    assert tv_distance({0: 1.0}, {1: 1.0}) == 1
    assert tv_distance({0: 0.5, 1: 0.5}, {0: 1.0}) == pytest.approx(0.5)
    with pytest.raises(InvalidInputError):
        tv_distance({0: 0.7}, {0: 1.0})


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 10)[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        wilson_interval(0, 0)


def test_cover_probability_extremes(g3):
    one = mc_cover_probability(g3, 1.0, 50, master_seed=0)
    assert one.phat == 1.0 and one.ci_lo == one.ci_hi == 1.0
    zero = mc_cover_probability(g3, 0.0, 50, master_seed=0)
    assert zero.phat == 0.0


def test_cover_probability_above_independent_product(graphs):
    g = graphs(6)
    p = p_for_mean(6, 0.5)
    est = mc_cover_probability(g, p, 10_000, master_seed=4)
    # coverage events are increasing, so they are positively correlated
    q = 0.5 / 720
    assert est.phat >= (1 - q) ** 720 - 0.02
    assert est.ci_lo <= est.phat <= est.ci_hi


def test_sweep_extremes_and_monotonicity(g3):
    report = threshold_sweep(g3, [0.0, 1.0], 20, master_seed=0)
    assert [row.phat for row in report.rows] == [0.0, 1.0]
    grid = np.linspace(0.05, 0.6, 12)
    report = threshold_sweep(g3, grid, 300, master_seed=9)
    phats = [row.phat for row in report.rows]
    assert phats == sorted(phats)
    with pytest.raises(InvalidInputError):
        threshold_sweep(g3, [0.5, 0.2], 10, master_seed=0)


def test_sweep_is_independent_of_workers(g3):
    grid = [0.1, 0.2, 0.3]
    one = threshold_sweep(g3, grid, 64, master_seed=3, workers=1)
    two = threshold_sweep(g3, grid, 64, master_seed=3, workers=2)
    assert one.csv_rows() == two.csv_rows()


def test_run_trials_is_independent_of_workers(g3):
    one = run_trials(g3, 0.1, 101, master_seed=8, workers=1)
    three = run_trials(g3, 0.1, 101, master_seed=8, workers=3)
    assert np.array_equal(one, three)


def test_gap_at_full_selection(g3):
    report = gap_experiment(g3, 1.0, 100, master_seed=0)
    assert report.empirical_pmf == {0: 1.0}
    assert report.tv_to_poisson == 0.0


def test_gap_n2_against_exact_law(graphs):
    g = graphs(2)
    p = 0.3
    report = gap_experiment(g, p, 100_000, master_seed=1)
    assert tv_distance(report.empirical_pmf, exact_distribution(g, p)) <= 0.01
    assert report.stein_chen_bound is not None
    data = report.to_dict()
    assert all(isinstance(k, str) for k in data["empirical_pmf"])


@pytest.mark.parametrize("p", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_monte_carlo_mean_calibration(graphs, n, p):
    g = graphs(n)
    x = run_trials(g, p, 10_000, master_seed=n)
    sd = math.sqrt(exact_variance(g, p) / x.size)
    assert abs(x.mean() - exact_mean(n, p)) <= 3 * sd


def test_samplers_draw_the_same_law_n3(g3):
    binomial = run_trials(g3, 0.15, 20_000, master_seed=3, sampler="binomial")
    bernoulli = run_trials(g3, 0.15, 20_000, master_seed=4, sampler="bernoulli")
    assert tv_distance(empirical_pmf(binomial), empirical_pmf(bernoulli)) <= 0.03


def test_gap_report_is_independent_of_workers(g3):
    one = gap_experiment(g3, 0.1, 300, master_seed=11, workers=1)
    two = gap_experiment(g3, 0.1, 300, master_seed=11, workers=2)
    assert one.to_dict() == two.to_dict()


def test_stein_chen_bounds_the_gap_n3(g3):
    report = gap_experiment(g3, 0.1, 20_000, master_seed=5)
    assert report.stein_chen_bound is not None
    assert report.tv_to_poisson <= report.stein_chen_bound + 3 * report.tv_standard_error


def test_gap_small_sample_flag(g3):
    report = gap_experiment(g3, 0.1, 64, master_seed=0)
    assert report.small_sample and report.warnings


def test_uncovered_marginal(g3):
    p = 0.1
    freq = uncovered_marginal(g3, p, "123", 5000, master_seed=6)
    q = (1 - p) ** 10
    assert abs(freq - q) < 4 * math.sqrt(q * (1 - q) / 5000)


def test_empirical_pmf():
    assert empirical_pmf([0, 0, 1, 3]) == {0: 0.5, 1: 0.25, 3: 0.25}


def test_selected_known_cover_has_no_uncovered(g3):
    known = PermSetBitmap.from_ranks(4, [rank("1342").r, rank("4213").r])
    assert verify_cover(g3, known).ok and count_uncovered(g3, known) == 0


@pytest.mark.slow
def test_monte_carlo_mean_calibration_n6(graphs):
    g = graphs(6)
    x = run_trials(g, 0.1, 10_000, master_seed=0)
    var = exact_variance(g, 0.1)
    assert abs(x.mean() - exact_mean(6, 0.1)) <= 3 * math.sqrt(var / 10_000)


@pytest.mark.slow
def test_threshold_shape_n7():
    from core.coverage import build

    g = build(7)
    lo, hi = p_for_mean(7, 20.0), p_for_mean(7, 0.05)
    report = threshold_sweep(g, np.linspace(lo, hi, 21), 2000, master_seed=0)
    assert report.rows[0].phat <= 0.05
    assert report.rows[-1].phat >= 0.95
    phats = [row.phat for row in report.rows]
    assert phats == sorted(phats)


@pytest.mark.slow
def test_poisson_gap_n7():
    from core.coverage import build

    g = build(7)
    p = p_for_mean(7, 1.0)
    report = gap_experiment(g, p, 20_000, master_seed=0)
    assert abs(report.empirical_mean - 1.0) <= 3 * math.sqrt(report.exact_variance / 20_000)
    assert report.tv_to_poisson <= 0.10
    assert report.tv_to_poisson <= report.stein_chen_bound + 3 * report.tv_standard_error


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.05, 0.2])
def test_monte_carlo_mean_calibration_n6_other_densities(graphs, p):
    g = graphs(6)
    x = run_trials(g, p, 10_000, master_seed=1)
    assert abs(x.mean() - exact_mean(6, p)) <= 3 * math.sqrt(exact_variance(g, p) / 10_000)


def test_poisson_gap_shrinks_as_the_mean_falls_n6(graphs):
    g = graphs(6)
    gaps = [
        gap_experiment(g, p_for_mean(6, target), 10_000, master_seed=0).tv_to_poisson
        for target in (5.0, 1.0, 0.2)
    ]
    assert gaps[1] <= gaps[0] + 0.02
    assert gaps[2] <= gaps[1] + 0.02
