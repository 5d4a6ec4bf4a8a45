"""LeadingOnes, its one-bit prior-noise wrapper, and evaluation counting.

Fitness values are exact integers throughout; the noisy wrapper never mutates
the evaluated individual.  Noise draws consume the random stream in a fixed
documented order (noise coin first, then flip index) so runs replay exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import Bitstring, Population


@dataclass(frozen=True)
class NoiseConfig:
    """One uniformly chosen bit is flipped with probability ``p`` before scoring."""

    p: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"flip probability must be in [0, 1), got {self.p}")

    @property
    def active(self) -> bool:
        return self.p > 0.0


@dataclass
class EvaluationCounter:
    """Counts fitness calls attributed to a run; grows by the population size per iteration."""

    evals: int = 0

    def add(self, count: int) -> None:
        if count < 0:
            raise ValueError("evaluation count can only grow")
        self.evals += count


def leading_ones(x: Bitstring) -> int:
    """Length of the maximal all-ones prefix; in [0, n]."""
    bits = np.asarray(x, dtype=np.uint8)
    return int(kernels.leading_ones_rows(bits.reshape(1, -1))[0])


def noisy_leading_ones(x: Bitstring, noise: NoiseConfig, rng: np.random.Generator) -> int:
    """Score ``x`` after one-bit prior noise.

    With probability 1-p this is plain ``leading_ones(x)``.  Otherwise a
    uniformly chosen bit is flipped in a copy before scoring; ``x`` itself is
    never mutated.  When ``p`` is 0 the stream is not consumed at all.
    """
    if not noise.active:
        return leading_ones(x)
    if rng.random() >= noise.p:
        return leading_ones(x)
    bits = np.asarray(x, dtype=np.uint8).copy()
    flip = int(rng.integers(bits.shape[0]))
    bits[flip] ^= 1
    return leading_ones(bits)


def noisy_leading_ones_batch(
    bits: np.ndarray,
    fitness_true: np.ndarray,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized noisy scores for a (rows, n) matrix with known true scores.

    Stream order per call: one coin per row, then one flip index per noisy
    row (row order).  With ``p`` = 0 nothing is drawn and the true scores are
    returned unchanged.
    """
    if not noise.active:
        return fitness_true
    rows, n = bits.shape
    coins = rng.random(rows)
    noisy_rows = np.nonzero(coins < noise.p)[0]
    fitness = fitness_true.copy()
    if noisy_rows.size:
        flips = rng.integers(0, n, size=noisy_rows.size)
        flipped = bits[noisy_rows].copy()
        flipped[np.arange(noisy_rows.size), flips] ^= 1
        fitness[noisy_rows] = kernels.leading_ones_rows(flipped)
    return fitness


def expected_noisy_fitness(x: Bitstring, noise: NoiseConfig) -> float:
    """Exact expectation of the noisy score by enumerating all single-bit flips."""
    bits = np.asarray(x, dtype=np.uint8)
    n = bits.shape[0]
    base = leading_ones(bits)
    if not noise.active:
        return float(base)
    flipped = np.tile(bits, (n, 1))
    flipped[np.arange(n), np.arange(n)] ^= 1
    flip_scores = kernels.leading_ones_rows(flipped)
    return (1.0 - noise.p) * base + (noise.p / n) * float(flip_scores.sum())


def evaluate_population(
    pop: Population,
    noise: NoiseConfig,
    rng: np.random.Generator,
    counter: EvaluationCounter | None = None,
) -> Population:
    """Fill both fitness fields; one evaluation is charged per member."""
    fitness_true = kernels.leading_ones_rows(pop.members)
    fitness_noisy = noisy_leading_ones_batch(pop.members, fitness_true, noise, rng)
    if counter is not None:
        counter.add(pop.size)
    return pop.with_fitness(fitness_true, fitness_noisy)
