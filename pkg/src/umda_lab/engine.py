"""The sample / sort / select / update loop with margin-clamped model updates.

One run owns one random stream.  Per iteration the stream is consumed in a
fixed order: the (lambda, n) uniform sampling block row-major, then (only
when noise is active) one noise coin per individual followed by one flip
index per noisy individual.  This makes every run bit-reproducible from its
seed, on either kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instrumentation import IterationStats, iteration_stats
from .model import Population, ProbabilityVector, clamp_vector, init_model, sample_population
from .objectives import EvaluationCounter, NoiseConfig, evaluate_population
from . import kernels


@dataclass(frozen=True)
class UmdaConfig:
    """Parameters of a single run.

    ``max_evals`` defaults to 100 * n**2 evaluations, generous for the
    regimes where the optimum is reachable at all.  Trace recording is dense
    up to ``dense_until`` iterations, then thinned to every ``thin_every``-th
    iteration (the final iteration is always recorded).
    ``track_marginals_from`` records a per-iteration snapshot of the model
    marginals from that 0-based position onward.
    """

    n: int
    lam: int
    mu: int
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    max_evals: Optional[int] = None
    seed: int = 0
    record_trace: bool = True
    dense_until: int = 100_000
    thin_every: int = 100
    track_marginals_from: Optional[int] = None
    record_level_counts: bool = False

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"problem size must be at least 2, got {self.n}")
        if not 1 <= self.mu < self.lam:
            raise ValueError(f"need 1 <= mu < lambda, got mu={self.mu}, lambda={self.lam}")
        if self.max_evals is None:
            object.__setattr__(self, "max_evals", 100 * self.n * self.n)
        if self.max_evals < self.lam:
            raise ValueError(f"budget {self.max_evals} below one population of {self.lam}")
        if self.thin_every < 1:
            raise ValueError("thin_every must be at least 1")
        if self.track_marginals_from is not None and not 0 <= self.track_marginals_from < self.n:
            raise ValueError("track_marginals_from outside [0, n)")

    @property
    def gamma_star(self) -> float:
        return self.mu / self.lam


@dataclass(frozen=True)
class SortedPopulation:
    """Population reordered by non-increasing noisy fitness; ties keep sampling order."""

    members: np.ndarray
    fitness_true: np.ndarray
    fitness_noisy: np.ndarray
    order: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.diff(self.fitness_noisy) > 0):
            raise ValueError("sorted population must have non-increasing fitness")

    @property
    def size(self) -> int:
        return self.members.shape[0]


@dataclass(frozen=True)
class ModelUpdate:
    """Per-position ones counts among the parents and the resulting clamped model."""

    ones_counts: np.ndarray
    new_model: ProbabilityVector


@dataclass(frozen=True)
class Trace:
    """Thinned per-iteration statistics in column form.

    ``t`` holds the recorded 0-based iteration indices; ``evals`` is the
    cumulative evaluation count at the end of each recorded iteration.
    ``marginals_tail`` (when tracked) holds the model snapshot used to sample
    iteration ``t``, from position ``tail_start`` onward.
    """

    t: np.ndarray
    z_mu: np.ndarray
    z_star: np.ndarray
    best_true: np.ndarray
    misranked: np.ndarray
    evals: np.ndarray
    tail_start: Optional[int] = None
    marginals_tail: Optional[np.ndarray] = None
    stats: Optional[list[IterationStats]] = None

    def __len__(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class RunResult:
    success: bool
    evals: int
    iterations: int
    trace: Optional[Trace] = None


class _TraceRecorder:
    def __init__(self, config: UmdaConfig) -> None:
        self._config = config
        self._t: list[int] = []
        self._z_mu: list[int] = []
        self._z_star: list[int] = []
        self._best: list[int] = []
        self._misranked: list[int] = []
        self._evals: list[int] = []
        self._tails: list[np.ndarray] = []
        self._stats: list[IterationStats] = []

    def _due(self, t: int) -> bool:
        return t < self._config.dense_until or t % self._config.thin_every == 0

    def observe(self, stats: IterationStats, model: ProbabilityVector, evals: int, final: bool) -> None:
        if not (final or self._due(stats.t)):
            return
        self._t.append(stats.t)
        self._z_mu.append(stats.z_mu)
        self._z_star.append(stats.z_star)
        self._best.append(stats.best_true)
        self._misranked.append(stats.misranked)
        self._evals.append(evals)
        if self._config.track_marginals_from is not None:
            self._tails.append(model.marginals[self._config.track_marginals_from:].copy())
        if self._config.record_level_counts:
            self._stats.append(stats)

    def build(self) -> Trace:
        tail_start = self._config.track_marginals_from
        return Trace(
            t=np.array(self._t, dtype=np.int64),
            z_mu=np.array(self._z_mu, dtype=np.int64),
            z_star=np.array(self._z_star, dtype=np.int64),
            best_true=np.array(self._best, dtype=np.int64),
            misranked=np.array(self._misranked, dtype=np.int64),
            evals=np.array(self._evals, dtype=np.int64),
            tail_start=tail_start,
            marginals_tail=np.array(self._tails) if tail_start is not None else None,
            stats=self._stats if self._config.record_level_counts else None,
        )


def sort_by_fitness(pop: Population) -> SortedPopulation:
    """Stable sort by noisy fitness, non-increasing; ties keep sampling order."""
    if pop.fitness_noisy is None or pop.fitness_true is None:
        raise ValueError("population must be evaluated before sorting")
    order = np.argsort(-pop.fitness_noisy, kind="stable")
    return SortedPopulation(
        members=pop.members[order],
        fitness_true=pop.fitness_true[order],
        fitness_noisy=pop.fitness_noisy[order],
        order=order,
    )


def select_parents(pop: SortedPopulation, mu: int) -> Population:
    """The mu fittest individuals (by noisy fitness) in sorted order."""
    if mu > pop.size:
        raise ValueError(f"cannot select {mu} parents from {pop.size} individuals")
    return Population(
        members=pop.members[:mu],
        fitness_true=pop.fitness_true[:mu],
        fitness_noisy=pop.fitness_noisy[:mu],
    )


def update_model(selected: Population, mu: int, n: int) -> ModelUpdate:
    """Set each marginal to the parents' ones frequency, clamped to the borders."""
    if selected.size != mu:
        raise ValueError(f"expected exactly {mu} selected individuals, got {selected.size}")
    ones = kernels.column_ones_counts(selected.members, np.arange(mu))
    marginals = clamp_vector(ones / mu, n)
    return ModelUpdate(ones_counts=ones, new_model=ProbabilityVector(marginals=marginals, n=n))


def run(config: UmdaConfig) -> RunResult:
    """Iterate until the all-ones string is sampled or the budget is spent.

    The optimum check uses true fitness on every sampled population before
    selection, so noise cannot hide a sampled optimum.  Budget exhaustion is
    a normal result with ``success`` False.
    """
    rng = np.random.default_rng(config.seed)
    model = init_model(config.n)
    counter = EvaluationCounter()
    recorder = _TraceRecorder(config) if config.record_trace else None
    iterations = 0
    success = False
    while counter.evals < config.max_evals:
        pop = sample_population(model, config.lam, rng)
        pop = evaluate_population(pop, config.noise, rng, counter)
        stats = iteration_stats(pop, config.mu, iterations)
        iterations += 1
        success = stats.best_true == config.n
        final = success or counter.evals >= config.max_evals
        if recorder is not None:
            recorder.observe(stats, model, counter.evals, final)
        if final:
            break
        parents = select_parents(sort_by_fitness(pop), config.mu)
        model = update_model(parents, config.mu, config.n).new_model
    return RunResult(
        success=success,
        evals=counter.evals,
        iterations=iterations,
        trace=recorder.build() if recorder is not None else None,
    )
