"""Per-iteration analysis quantities and the closed-form level thresholds.

Level counts and the derived depths are always computed from *true* fitness,
also in noisy runs, so they keep their meaning when selection is misled by
noise.  ``C[i-1]`` (0-based) counts individuals with at least ``i`` leading
ones; ``D[i-1]`` counts those with exactly ``i-1`` leading ones followed by a
zero, with ``D[0]`` counting the zero-prefix individuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import Population


@dataclass(frozen=True)
class IterationStats:
    """Snapshot of one iteration: level counts, depths, and noise misranks.

    ``levels_at_least`` / ``levels_exact`` are the C and D count vectors
    truncated to the deepest non-empty level (positions beyond ``z_star`` are
    implicitly zero).  ``misranked`` counts individuals whose noisy score
    reaches level ``z_mu + 1`` although their true score does not (written to
    the ``B`` trace column; always 0 without noise).
    """

    t: int
    levels_at_least: np.ndarray
    levels_exact: np.ndarray
    z_mu: int
    z_star: int
    best_true: int
    misranked: int


@dataclass(frozen=True)
class ThresholdParams:
    """Analytic depth thresholds for selective pressure gamma_star = mu/lambda.

    ``alpha``/``beta`` bound the depth the mu-th best individual settles
    between, ``kappa`` is the equilibrium depth where the expected number of
    survivors equals mu.  ``alpha`` is None when gamma_star/(1-delta) >= 1,
    i.e. when the bound exceeds any finite depth.
    """

    n: int
    gamma_star: float
    delta: float
    epsilon: Optional[float]
    alpha: Optional[float]
    beta: float
    kappa: float


@dataclass(frozen=True)
class TraceSummary:
    """Aggregates over a run trace: first hit of alpha, drift, windowed mean depth."""

    tau: Optional[int]
    mean_drift: float
    time_avg_z: float
    max_z_star: int
    window: tuple[int, int]


def level_counts(pop: Population) -> tuple[np.ndarray, np.ndarray]:
    """Count individuals per leading-ones level.

    Returns full-length vectors ``(C, D)`` where ``C[i-1]`` is the number of
    members with at least ``i`` leading ones and ``D[i-1]`` the number with
    exactly ``i-1``.  Requires true fitness to be evaluated.
    """
    if pop.fitness_true is None:
        raise ValueError("true fitness must be evaluated before counting levels")
    return level_counts_from_fitness(pop.fitness_true, pop.n)


def level_counts_from_fitness(fitness: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    per_value = np.bincount(fitness, minlength=n + 1)
    at_least = np.cumsum(per_value[::-1])[::-1]  # at_least[v] = #{fitness >= v}
    c = at_least[1:]
    d = np.concatenate(([per_value.sum()], c[:-1])) - c
    return c.astype(np.int64), d.astype(np.int64)


def z_values(c: np.ndarray, mu: int) -> tuple[int, int]:
    """Deepest level still holding at least mu members, and deepest non-empty level."""
    hit_mu = np.nonzero(c >= mu)[0]
    hit_any = np.nonzero(c > 0)[0]
    z_mu = int(hit_mu[-1]) + 1 if hit_mu.size else 0
    z_star = int(hit_any[-1]) + 1 if hit_any.size else 0
    return z_mu, z_star


def noisy_misrank_count(pop: Population, j: int) -> int:
    """Individuals whose noisy score reaches level j while their true score does not."""
    if pop.fitness_true is None or pop.fitness_noisy is None:
        raise ValueError("both fitness fields must be evaluated")
    return int(np.count_nonzero((pop.fitness_true < j) & (pop.fitness_noisy >= j)))


def iteration_stats(pop: Population, mu: int, t: int) -> IterationStats:
    """Compute the full per-iteration snapshot and check the counting identity."""
    c, d = level_counts(pop)
    z_mu, z_star = z_values(c, mu)
    size = pop.size
    # counting identity: C[i-1] = C[i] + D[i], anchored at C[0] = population size
    previous = np.concatenate(([size], c[:-1]))
    if not np.array_equal(previous, c + d):
        raise AssertionError("level counting identity violated")
    misranked = noisy_misrank_count(pop, z_mu + 1)
    return IterationStats(
        t=t,
        levels_at_least=c[:z_star].copy(),
        levels_exact=d[:z_star].copy(),
        z_mu=z_mu,
        z_star=z_star,
        best_true=int(pop.fitness_true.max()),
        misranked=misranked,
    )


def thresholds(n: int, gamma_star: float, delta: float, epsilon: Optional[float] = None) -> ThresholdParams:
    """Closed-form depth thresholds; any consistent log base gives the same values."""
    if not 0.0 < gamma_star < 1.0:
        raise ValueError(f"selective pressure must be in (0, 1), got {gamma_star}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if epsilon is not None and not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    log_keep = math.log(1.0 - 1.0 / n)
    lower_ratio = gamma_star / (1.0 - delta)
    alpha = math.log(lower_ratio) / log_keep if lower_ratio < 1.0 else None
    beta = math.log(gamma_star / (1.0 + delta)) / log_keep
    kappa = math.log(gamma_star) / log_keep
    return ThresholdParams(
        n=n, gamma_star=gamma_star, delta=delta, epsilon=epsilon,
        alpha=alpha, beta=beta, kappa=kappa,
    )


def low_pressure_condition(params: ThresholdParams) -> bool:
    """Whether the configured pressure is low enough for the stall regime.

    Requires gamma_star >= (1+delta) / e^(1-epsilon); epsilon must be set.
    """
    if params.epsilon is None:
        raise ValueError("epsilon required to evaluate the low-pressure condition")
    return params.gamma_star >= (1.0 + params.delta) / math.exp(1.0 - params.epsilon)


def summarize_trace(
    z_mu: Sequence[int],
    params: ThresholdParams,
    z_star: Sequence[int] | None = None,
    window: Optional[tuple[int, int]] = None,
) -> TraceSummary:
    """Summarize a depth trace.

    ``tau`` is the first 0-indexed trace position where the depth reaches
    ``alpha`` (None if never, or if alpha is undefined).  ``window`` selects
    the slice averaged for ``time_avg_z``; the default is the second half of
    the trace, discarding burn-in.
    """
    z = np.asarray(z_mu, dtype=np.int64)
    if z.size == 0:
        raise ValueError("trace must be non-empty")
    tau: Optional[int] = None
    if params.alpha is not None:
        hits = np.nonzero(z >= params.alpha)[0]
        if hits.size:
            tau = int(hits[0])
    mean_drift = float(np.diff(z).mean()) if z.size > 1 else 0.0
    if window is None:
        window = (z.size // 2, z.size)
    lo, hi = window
    if not (0 <= lo < hi <= z.size):
        raise ValueError(f"window {window} outside trace of length {z.size}")
    time_avg = float(z[lo:hi].mean())
    max_z_star = int(np.max(z_star)) if z_star is not None else int(z.max())
    return TraceSummary(
        tau=tau, mean_drift=mean_drift, time_avg_z=time_avg,
        max_z_star=max_z_star, window=(lo, hi),
    )
