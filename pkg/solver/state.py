from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from spectral.fields import SpectralField
from spectral.operators import Velocity, velocity_from_density


@dataclass(frozen=True, eq=False)
class SimState:
    """Perturbation ρ at time t after `step` steps; u is always re-derived from ρ."""

    t: float
    rho: SpectralField
    step: int = 0

    @cached_property
    def velocity(self) -> Velocity:
        return velocity_from_density(self.rho)

    @property
    def grid(self):
        return self.rho.grid

    @cached_property
    def max_speed(self) -> float:
        return max(float(np.abs(u.physical()).max()) for u in self.velocity)
