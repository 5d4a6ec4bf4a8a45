import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umda_lab import (
    NoiseConfig,
    UmdaConfig,
    iteration_stats,
    level_counts,
    noisy_misrank_count,
    run,
    summarize_trace,
    thresholds,
    z_values,
)
from umda_lab.instrumentation import ThresholdParams, level_counts_from_fitness, low_pressure_condition
from umda_lab.model import Population


def _evaluated(rows, fitness_noisy=None):
    members = np.array(rows, dtype=np.uint8)
    fit = np.array([len(list(_prefix(row))) for row in rows], dtype=np.int64)
    noisy = np.array(fitness_noisy, dtype=np.int64) if fitness_noisy is not None else fit
    return Population(members=members, fitness_true=fit, fitness_noisy=noisy)


def _prefix(row):
    for bit in row:
        if bit != 1:
            return
        yield bit


def test_level_counts_worked_example():
    pop = _evaluated([[1, 1, 1], [1, 1, 0], [0, 1, 1], [0, 0, 0]])
    c, d = level_counts(pop)
    assert c.tolist() == [2, 2, 1]
    assert d.tolist() == [2, 0, 1]


def test_level_counts_all_zeros_and_all_ones():
    zeros = _evaluated([[0, 0, 0]] * 5)
    c, d = level_counts(zeros)
    assert c.tolist() == [0, 0, 0]
    assert d.tolist() == [5, 0, 0]
    ones = _evaluated([[1, 1, 1]] * 5)
    c, d = level_counts(ones)
    assert c.tolist() == [5, 5, 5]
    assert d.tolist() == [0, 0, 0]


def test_level_counts_requires_fitness():
    with pytest.raises(ValueError):
        level_counts(Population(members=np.zeros((2, 3), dtype=np.uint8)))


def test_z_values_examples():
    assert z_values(np.array([2, 2, 1]), mu=2) == (2, 3)
    assert z_values(np.zeros(4, dtype=int), mu=3) == (0, 0)
    assert z_values(np.full(6, 9), mu=4) == (6, 6)


@given(st.lists(st.integers(min_value=0, max_value=8), min_size=1, max_size=60), st.integers(1, 8))
def test_counting_identity_and_depth_order(fitness, mu):
    n = 8
    fit = np.array(fitness, dtype=np.int64)
    c, d = level_counts_from_fitness(fit, n)
    previous = np.concatenate(([len(fitness)], c[:-1]))
    np.testing.assert_array_equal(previous, c + d)
    z_mu, z_star = z_values(c, mu)
    assert 0 <= z_mu <= z_star <= n
    assert z_star == int(fit.max())


def test_thresholds_reference_values():
    params = thresholds(100, 0.5, 0.2, epsilon=0.1)
    # defining identities, checked against the closed forms directly
    assert (1 - 1 / 100) ** params.alpha == pytest.approx(0.5 / 0.8, rel=1e-12)
    assert (1 - 1 / 100) ** params.beta == pytest.approx(0.5 / 1.2, rel=1e-12)
    assert (1 - 1 / 100) ** params.kappa == pytest.approx(0.5, rel=1e-12)
    assert round(params.alpha) == 47
    assert round(params.beta) == 87
    assert params.alpha == pytest.approx(46.76496746941952, abs=1e-9)
    assert params.beta == pytest.approx(87.10840613837745, abs=1e-9)
    assert params.kappa == pytest.approx(68.96756393652849, abs=1e-9)


def test_thresholds_merge_as_delta_vanishes():
    params = thresholds(100, 0.5, 1e-12)
    assert params.alpha == pytest.approx(params.kappa, abs=1e-6)
    assert params.beta == pytest.approx(params.kappa, abs=1e-6)


def test_thresholds_alpha_undefined_when_ratio_reaches_one():
    params = thresholds(100, 0.5, 0.6)  # 0.5 / 0.4 > 1
    assert params.alpha is None
    assert params.beta > params.kappa  # beta still defined


def test_thresholds_validation():
    with pytest.raises(ValueError):
        thresholds(100, 0.0, 0.2)
    with pytest.raises(ValueError):
        thresholds(100, 0.5, 0.0)
    with pytest.raises(ValueError):
        thresholds(100, 0.5, 0.2, epsilon=1.5)


@given(
    st.integers(min_value=3, max_value=5000),
    st.floats(min_value=0.01, max_value=0.99),
    st.floats(min_value=0.01, max_value=0.99),
)
def test_threshold_ordering(n, gamma_star, delta):
    params = thresholds(n, gamma_star, delta)
    if params.alpha is not None:
        assert params.alpha <= params.kappa + 1e-9
    assert params.kappa <= params.beta + 1e-9


def test_low_pressure_condition():
    ok = thresholds(100, 0.5, 0.2, epsilon=0.1)
    assert low_pressure_condition(ok)  # 0.5 >= 1.2 / e^0.9 ~ 0.4879
    too_low = thresholds(100, 0.3, 0.2, epsilon=0.1)
    assert not low_pressure_condition(too_low)
    with pytest.raises(ValueError):
        low_pressure_condition(thresholds(100, 0.5, 0.2))


def test_misrank_count_zero_without_noise():
    pop = _evaluated([[1, 1, 0], [0, 1, 1]])
    for level in range(5):
        assert noisy_misrank_count(pop, level) == 0


def test_misrank_count_forced_example():
    # true fitness 0, noisy draw flipped the first bit giving noisy score 3
    pop = _evaluated([[0, 1, 1]], fitness_noisy=[3])
    assert noisy_misrank_count(pop, 1) == 1


def test_misrank_expectation_bounded_by_flip_rate():
    # per individual, inflating past level z_mu+1 needs the noise flip to hit
    # its first zero, so E[B] <= lam * p / n whatever the population law
    lam, n, p = 100, 10, 0.3
    config_rng = np.random.default_rng(31)
    from umda_lab.model import init_model, sample_population
    from umda_lab.objectives import evaluate_population

    model = init_model(n)
    totals = []
    for _ in range(2000):
        pop = evaluate_population(sample_population(model, lam, config_rng), NoiseConfig(p), config_rng)
        stats = iteration_stats(pop, mu=10, t=0)
        totals.append(stats.misranked)
    bound = lam * p / n
    mean = float(np.mean(totals))
    sigma = float(np.std(totals, ddof=1)) / math.sqrt(len(totals))
    assert mean <= bound + 3 * sigma


def test_iteration_stats_truncates_levels_at_deepest():
    pop = _evaluated([[1, 1, 0], [1, 0, 0], [0, 0, 1]])
    stats = iteration_stats(pop, mu=2, t=4)
    assert stats.t == 4
    assert stats.z_star == 2
    assert stats.levels_at_least.shape == (2,)
    assert stats.levels_at_least.tolist() == [2, 1]
    assert stats.levels_exact.tolist() == [1, 1]
    assert stats.best_true == 2
    assert stats.z_mu == 1


def _params(alpha):
    return ThresholdParams(n=100, gamma_star=0.5, delta=0.2, epsilon=None, alpha=alpha, beta=87.0, kappa=69.0)


def test_summarize_trace_tau_zero_indexed():
    summary = summarize_trace([10, 20, 50], _params(47.0))
    assert summary.tau == 2


def test_summarize_trace_tau_absent():
    assert summarize_trace([10, 20, 30], _params(47.0)).tau is None
    assert summarize_trace([10, 20, 50], _params(None)).tau is None


def test_summarize_trace_tau_is_minimal():
    summary = summarize_trace([10, 48, 20, 50], _params(47.0))
    assert summary.tau == 1


def test_summarize_trace_drift():
    assert summarize_trace([5, 5, 5, 5], _params(None)).mean_drift == 0.0
    assert summarize_trace([1, 2, 3, 4], _params(None)).mean_drift == 1.0


def test_summarize_trace_window_default_second_half():
    summary = summarize_trace([0, 0, 10, 10], _params(None))
    assert summary.window == (2, 4)
    assert summary.time_avg_z == 10.0
    explicit = summarize_trace([0, 0, 10, 10], _params(None), window=(0, 2))
    assert explicit.time_avg_z == 0.0
    with pytest.raises(ValueError):
        summarize_trace([1, 2], _params(None), window=(1, 5))
    with pytest.raises(ValueError):
        summarize_trace([], _params(None))


def test_counting_identity_holds_throughout_a_run():
    result = run(UmdaConfig(n=10, lam=16, mu=4, seed=33, max_evals=3200, record_level_counts=True))
    for stats in result.trace.stats:
        size = 16
        c = stats.levels_at_least
        d = stats.levels_exact
        previous = np.concatenate(([size], c[:-1]))
        np.testing.assert_array_equal(previous, c + d)
