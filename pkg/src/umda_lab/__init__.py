"""Simulation lab for the univariate marginal distribution algorithm on LeadingOnes."""

from ._version import VERSION as __version__
from .engine import ModelUpdate, RunResult, SortedPopulation, Trace, UmdaConfig, run, select_parents, sort_by_fitness, update_model
from .instrumentation import (
    IterationStats,
    ThresholdParams,
    TraceSummary,
    iteration_stats,
    level_counts,
    noisy_misrank_count,
    summarize_trace,
    thresholds,
    z_values,
)
from .model import (
    Population,
    ProbabilityVector,
    clamp_to_margins,
    init_model,
    sample_individual,
    sample_population,
)
from .objectives import (
    EvaluationCounter,
    NoiseConfig,
    evaluate_population,
    expected_noisy_fitness,
    leading_ones,
    noisy_leading_ones,
)

__all__ = [
    "__version__",
    "EvaluationCounter",
    "IterationStats",
    "ModelUpdate",
    "NoiseConfig",
    "Population",
    "ProbabilityVector",
    "RunResult",
    "SortedPopulation",
    "ThresholdParams",
    "Trace",
    "TraceSummary",
    "UmdaConfig",
    "clamp_to_margins",
    "evaluate_population",
    "expected_noisy_fitness",
    "init_model",
    "iteration_stats",
    "leading_ones",
    "level_counts",
    "noisy_leading_ones",
    "noisy_misrank_count",
    "run",
    "sample_individual",
    "sample_population",
    "select_parents",
    "sort_by_fitness",
    "summarize_trace",
    "thresholds",
    "update_model",
    "z_values",
]
