"""Shared configuration for simulation and bound computations."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["SimulationConfig"]


@dataclass(frozen=True)
class SimulationConfig:
    """Problem dimensions and Monte Carlo budgets for one experiment.

    Attributes
    ----------
    m : int
        Number of hypotheses, at least 1.
    m0 : int
        Number of true nulls, ``0 <= m0 <= m``.
    q : float
        Nominal FDR level in ``(0, 1)``.
    replications : int
        Independent p-value vectors for FDR simulation (at least 2, so a
        sample standard deviation exists).
    mc_draws : int
        Mixing-variable sample size for bound integrations.
    seed : int
        Base seed, 64-bit; all streams derive from it deterministically.
    """

    m: int
    m0: int
    q: float
    replications: int = 10**5
    mc_draws: int = 10**5
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.m) < 1:
            raise ValueError("m must be >= 1")
        if not 0 <= int(self.m0) <= int(self.m):
            raise ValueError("m0 must satisfy 0 <= m0 <= m")
        if not (isinstance(self.q, (int, float)) and math.isfinite(self.q) and 0.0 < self.q < 1.0):
            raise ValueError("q must lie in (0, 1)")
        if int(self.replications) < 2:
            raise ValueError("replications must be >= 2")
        if int(self.mc_draws) < 1:
            raise ValueError("mc_draws must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "m0", int(self.m0))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "mc_draws", int(self.mc_draws))
        object.__setattr__(self, "seed", int(self.seed))
