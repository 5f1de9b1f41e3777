"""Discrete uncertainty set of renewable capacity factors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Scenario:
    id: str
    factors: Mapping[int, float]  # renewable bus -> capacity factor
    probability: float

    def factor(self, bus: int) -> float:
        return self.factors[bus]


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]

    def __post_init__(self):
        ids = [s.id for s in self.scenarios]
        if len(ids) != len(set(ids)):
            raise ValidationError("scenario ids must be unique")
        for s in self.scenarios:
            if s.probability <= 0:
                raise ValidationError(f"scenario {s.id}: probability must be > 0")
            if any(f < 0 for f in s.factors.values()):
                raise ValidationError(f"scenario {s.id}: capacity factors must be >= 0")
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROB_TOL * max(1, len(ids)):
            raise ValidationError(f"scenario probabilities sum to {total!r}, not 1")

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])


def sample_uniform(sites: Sequence[int], n: int, lo: float, hi: float, seed: int) -> ScenarioSet:
    """Draw n i.i.d. uniform factor vectors on [lo, hi], each with probability 1/n.

    Uses numpy's PCG64 generator so a seed reproduces the exact factor values.
    """
    if n < 1:
        raise ValueError("need at least one scenario")
    if lo < 0:
        raise ValueError("capacity factors cannot be negative")
    if lo > hi:
        raise ValueError("empty sampling interval")
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.uniform(lo, hi, size=(n, len(sites)))
    scenarios = tuple(
        Scenario(id=f"s{k:03d}", factors=dict(zip(sites, map(float, draws[k]))), probability=1.0 / n)
        for k in range(n)
    )
    return ScenarioSet(scenarios)


def expectation(scenario_set: ScenarioSet, values: Mapping[str, float] | Callable[[Scenario], float]) -> float:
    """Probability-weighted sum of a per-scenario value."""
    if callable(values):
        return sum(s.probability * values(s) for s in scenario_set)
    total = 0.0
    for s in scenario_set:
        if s.id not in values:
            raise KeyError(f"value missing for scenario {s.id}")
        total += s.probability * values[s.id]
    return total
