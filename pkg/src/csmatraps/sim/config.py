"""Simulation configuration: timer distributions and run parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig
from ..graph import ContentionGraph

KINDS = ("exponential", "constant", "uniform")
ALIASES = {"exp": "exponential", "const": "constant", "det": "constant", "unif": "uniform"}


@dataclass(frozen=True)
class DistributionSpec:
    """A positive timer distribution. ``uniform`` draws from ``[a, b]``."""

    kind: str
    mean: float
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfig(f"unknown distribution kind {self.kind!r}")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise InvalidConfig(f"distribution mean must be positive, got {self.mean}")
        if self.kind == "uniform":
            if self.a is None or self.b is None:
                raise InvalidConfig("uniform distribution needs bounds a and b")
            if not 0 <= self.a < self.b:
                raise InvalidConfig(f"uniform bounds must satisfy 0 <= a < b, got {self.a}, {self.b}")
            if not math.isclose((self.a + self.b) / 2, self.mean, rel_tol=1e-9):
                raise InvalidConfig("uniform bounds must be centred on the mean")

    @classmethod
    def of(cls, kind: str, mean: float) -> DistributionSpec:
        """Build a distribution with the given mean; uniform spans ``[0, 2 * mean]``."""
        kind = ALIASES.get(kind, kind)
        if kind == "uniform":
            return cls(kind, mean, 0.0, 2.0 * mean)
        return cls(kind, mean)

    def with_mean(self, mean: float) -> DistributionSpec:
        """Same shape, rescaled to a new mean."""
        if self.kind == "uniform":
            scale = mean / self.mean
            return DistributionSpec("uniform", mean, self.a * scale, self.b * scale)
        return DistributionSpec(self.kind, mean)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exponential":
            return rng.exponential(self.mean, size)
        if self.kind == "constant":
            return np.full(size, float(self.mean))
        return rng.uniform(self.a, self.b, size)


@dataclass(frozen=True)
class SimConfig:
    """One simulation run in normalized time (mean transmission duration 1).

    Statistics cover ``[warmup, warmup + horizon]``.
    """

    graph: ContentionGraph
    rho: float
    backoff: DistributionSpec
    transmission: DistributionSpec
    horizon: float
    seed: int = 0
    warmup: float = 100.0
    initial_active: int = 0

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise InvalidConfig(f"rho must be positive, got {self.rho}")
        if not math.isclose(self.transmission.mean, 1.0, rel_tol=1e-9):
            raise InvalidConfig("transmission mean must be 1 in normalized time")
        if not math.isclose(self.backoff.mean, 1.0 / self.rho, rel_tol=1e-9):
            raise InvalidConfig("backoff mean must equal 1 / rho")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidConfig(f"horizon must be positive, got {self.horizon}")
        if not (self.warmup >= 0 and math.isfinite(self.warmup)):
            raise InvalidConfig(f"warmup must be non-negative, got {self.warmup}")
        if self.seed < 0:
            raise InvalidConfig("seed must be non-negative")
        if self.initial_active >> self.graph.n_links:
            raise InvalidConfig("initial_active names links outside the graph")
        if not self.graph.is_independent(self.initial_active):
            raise InvalidConfig("initial_active is not an independent set")

    @classmethod
    def create(
        cls,
        graph: ContentionGraph,
        rho: float,
        horizon: float,
        *,
        backoff: str = "exponential",
        transmission: str = "exponential",
        seed: int = 0,
        warmup: float = 100.0,
        initial_active: int = 0,
    ) -> SimConfig:
        """Build a config from distribution kind names, deriving the means from ``rho``."""
        if not rho > 0:
            raise InvalidConfig(f"rho must be positive, got {rho}")
        return cls(
            graph,
            float(rho),
            DistributionSpec.of(backoff, 1.0 / rho),
            DistributionSpec.of(transmission, 1.0),
            float(horizon),
            seed,
            float(warmup),
            initial_active,
        )

    @property
    def end_time(self) -> float:
        return self.warmup + self.horizon
