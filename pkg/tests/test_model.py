import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umda_lab import clamp_to_margins, init_model, sample_individual, sample_population
from umda_lab.model import ProbabilityVector, clamp_vector
from umda_lab.oracle import empirical_vs_exact, exact_product_distribution


def test_init_model_is_uniform():
    model = init_model(4)
    np.testing.assert_array_equal(model.marginals, [0.5, 0.5, 0.5, 0.5])


def test_init_model_boundary_n2():
    model = init_model(2)
    # borders collapse to the single point 0.5, which still contains 0.5
    np.testing.assert_array_equal(model.marginals, [0.5, 0.5])


def test_init_model_rejects_n1():
    with pytest.raises(ValueError):
        init_model(1)


@pytest.mark.parametrize(
    "value,expected",
    [(0.0, 0.01), (1.0, 0.99), (0.37, 0.37)],
)
def test_clamp_examples(value, expected):
    assert clamp_to_margins(value, 100) == pytest.approx(expected, abs=0.0)


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_clamp_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        clamp_to_margins(bad, 100)


@given(st.floats(min_value=0.0, max_value=1.0), st.integers(min_value=2, max_value=2000))
def test_clamp_always_lands_in_borders(value, n):
    clamped = clamp_to_margins(value, n)
    assert 1.0 / n <= clamped <= 1.0 - 1.0 / n
    # interior values pass through untouched
    if 1.0 / n <= value <= 1.0 - 1.0 / n:
        assert clamped == value


def test_probability_vector_rejects_values_outside_borders():
    with pytest.raises(ValueError):
        ProbabilityVector(marginals=np.array([0.5, 0.005, 0.5]), n=3)
    with pytest.raises(ValueError):
        ProbabilityVector(marginals=np.array([0.5, 0.5]), n=3)


def test_clamp_vector_matches_scalar_clamp():
    values = np.linspace(0.0, 1.0, 21)
    got = clamp_vector(values, 10)
    want = [clamp_to_margins(v, 10) for v in values]
    np.testing.assert_allclose(got, want)


def test_sample_individual_mean_ones_near_expectation():
    n = 100
    model = ProbabilityVector(marginals=np.full(n, 0.99), n=n)
    rng = np.random.default_rng(11)
    draws = 2000
    ones = sum(int(sample_individual(model, rng).sum()) for _ in range(draws))
    mean = ones / draws
    sigma = math.sqrt(n * 0.99 * 0.01 / draws)
    assert abs(mean - 99.0) <= 3 * sigma


def test_upper_border_still_leaves_zeros_possible():
    n = 5
    model = ProbabilityVector(marginals=np.full(n, 1.0 - 1.0 / n), n=n)
    rng = np.random.default_rng(12)
    draws = 20000
    zeros_at_first = sum(1 - int(sample_individual(model, rng)[0]) for _ in range(draws))
    freq = zeros_at_first / draws
    sigma = math.sqrt(0.2 * 0.8 / draws)
    assert abs(freq - 0.2) <= 3 * sigma


def test_sample_population_shape_and_unset_fitness():
    model = init_model(8)
    rng = np.random.default_rng(0)
    pop = sample_population(model, 1, rng)
    assert pop.size == 1 and pop.n == 8
    assert pop.fitness_true is None and pop.fitness_noisy is None
    with pytest.raises(ValueError):
        sample_population(model, 0, rng)


def test_sample_population_mean_ones():
    model = init_model(100)
    rng = np.random.default_rng(13)
    totals = [sample_population(model, 20, rng).members.sum(axis=1).mean() for _ in range(200)]
    mean = float(np.mean(totals))
    sigma = math.sqrt(100 * 0.25 / (20 * 200))
    assert abs(mean - 50.0) <= 3 * sigma


def test_product_distribution_chi_square():
    # all eight length-3 bitstrings must appear with probability 1/8
    model = init_model(3)
    rng = np.random.default_rng(14)
    pop = sample_population(model, 100_000, rng)
    counts = {}
    for row in pop.members:
        key = tuple(int(b) for b in row)
        counts[key] = counts.get(key, 0) + 1
    exact = exact_product_distribution(model.marginals)
    report = empirical_vs_exact(counts, exact, tv_threshold=0.01, chi_square_significance=0.001)
    assert report.passed, report


def test_first_level_count_matches_binomial():
    # distribution of ones at position one over many populations vs Bin(lam, p1)
    lam, n = 20, 5
    model = init_model(n)
    rng = np.random.default_rng(15)
    populations = 100_000
    counts = {}
    for _ in range(populations):
        pop = sample_population(model, lam, rng)
        key = (int(pop.members[:, 0].sum()),)
        counts[key] = counts.get(key, 0) + 1
    pmf = {(k,): math.comb(lam, k) * 0.5**lam for k in range(lam + 1)}
    from umda_lab.oracle import ExactDistribution

    support = tuple(sorted(pmf))
    exact = ExactDistribution(support=support, probabilities=np.array([pmf[s] for s in support]))
    report = empirical_vs_exact(counts, exact, tv_threshold=0.01, chi_square_significance=0.001)
    assert report.passed, report


def test_marginal_half_frequency_bound():
    model = init_model(2)
    rng = np.random.default_rng(16)
    draws = 120_000
    pop = sample_population(model, draws, rng)
    freq = float(pop.members[:, 0].mean())
    sigma = math.sqrt(0.25 / draws)
    assert abs(freq - 0.5) <= 3 * sigma


def test_sampling_is_reproducible():
    model = init_model(40)
    pop_a = sample_population(model, 30, np.random.default_rng(99))
    pop_b = sample_population(model, 30, np.random.default_rng(99))
    np.testing.assert_array_equal(pop_a.members, pop_b.members)


def test_individual_and_population_consume_identical_streams():
    model = init_model(12)
    pop = sample_population(model, 6, np.random.default_rng(7))
    rng = np.random.default_rng(7)
    singles = np.stack([sample_individual(model, rng) for _ in range(6)])
    np.testing.assert_array_equal(pop.members, singles)
