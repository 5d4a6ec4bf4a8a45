"""Bitstrings, the marginal probability model, and population sampling.

A bitstring is a 1-d ``numpy`` array of 0/1 values (dtype ``uint8``).  The
probabilistic model is one independent one-probability per position, clamped
to the borders ``[1/n, 1 - 1/n]`` so no marginal can fix at 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels

Bitstring = np.ndarray


@dataclass(frozen=True)
class ProbabilityVector:
    """Per-position one-probabilities, all within the borders [1/n, 1-1/n]."""

    marginals: np.ndarray
    n: int

    def __post_init__(self) -> None:
        marginals = np.asarray(self.marginals, dtype=np.float64)
        if marginals.ndim != 1 or marginals.shape[0] != self.n:
            raise ValueError(f"expected {self.n} marginals, got shape {marginals.shape}")
        lo, hi = 1.0 / self.n, 1.0 - 1.0 / self.n
        if not np.all((marginals >= lo) & (marginals <= hi)):
            raise ValueError(f"marginals outside borders [{lo}, {hi}]")
        marginals = marginals.copy()
        marginals.flags.writeable = False
        object.__setattr__(self, "marginals", marginals)


@dataclass(frozen=True)
class Population:
    """Sampled individuals with fitness fields unset until evaluation.

    ``members`` has shape (size, n); fitness arrays, once set, hold one
    integer per member.  ``fitness_noisy`` is the score used for sorting and
    equals ``fitness_true`` when no noise is configured.
    """

    members: np.ndarray
    fitness_true: Optional[np.ndarray] = None
    fitness_noisy: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.members.ndim != 2:
            raise ValueError("members must be a (size, n) matrix")
        for name in ("fitness_true", "fitness_noisy"):
            values = getattr(self, name)
            if values is not None and values.shape != (self.size,):
                raise ValueError(f"{name} must have one entry per member")

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def n(self) -> int:
        return self.members.shape[1]

    def with_fitness(self, true: np.ndarray, noisy: np.ndarray) -> "Population":
        return replace(self, fitness_true=true, fitness_noisy=noisy)


def init_model(n: int) -> ProbabilityVector:
    """Uniform starting model: every marginal exactly 1/2.

    Rejects n < 2, where the borders 1/n and 1 - 1/n would collide or invert.
    """
    if n < 2:
        raise ValueError(f"problem size must be at least 2, got {n}")
    return ProbabilityVector(marginals=np.full(n, 0.5), n=n)


def clamp_to_margins(value: float, n: int) -> float:
    """Clamp a probability into the borders [1/n, 1 - 1/n]."""
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"value {value} outside [0, 1]")
    return max(1.0 / n, min(1.0 - 1.0 / n, value))


def clamp_vector(values: np.ndarray, n: int) -> np.ndarray:
    """Vectorized border clamp for a full marginal vector."""
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("values outside [0, 1]")
    return np.clip(values, 1.0 / n, 1.0 - 1.0 / n)


def sample_individual(model: ProbabilityVector, rng: np.random.Generator) -> Bitstring:
    """Draw one bitstring; bit i is 1 with probability marginals[i]."""
    return (rng.random(model.n) < model.marginals).astype(np.uint8)


def sample_population(model: ProbabilityVector, size: int, rng: np.random.Generator) -> Population:
    """Draw ``size`` independent individuals from the product distribution.

    Consumes exactly one (size, n) uniform block from ``rng`` in row-major
    order, so the stream position after the call is backend-independent.
    """
    if size < 1:
        raise ValueError(f"population size must be at least 1, got {size}")
    uniforms = rng.random((size, model.n))
    bits = kernels.sample_bits(uniforms, model.marginals)
    return Population(members=bits)
