"""Simulation configuration and initial perturbations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from core_utils.exceptions import ConfigurationError
from spectral.fields import SpectralField, random_field, sample
from spectral.grid import TWO_PI, Grid
from spectral.operators import bar_tilde_split, sobolev_norm
from stability.profiles import StratifiedProfile, linear

DEFAULT_NORMS = (0.0, 3.0, 4.0, 5.0, 10.0)


@dataclass(frozen=True)
class Mode:
    """amplitude·cos(n·x + phase) with integer mode numbers n."""

    wavevector: Tuple[int, ...]
    amplitude: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class InitialCondition:
    """
    Perturbation ρ₀ scaled so that |ρ₀|_{H^norm_index} = epsilon.

    kind "random" draws a band-limited field with spectrum ∝ (1+|n|)^{-slope}
    from the run seed; kind "modes" sums explicit cosines.
    """

    kind: str = "random"
    epsilon: float = 1e-3
    norm_index: float = 4.0
    band: int = 8
    slope: float = 6.0
    modes: Tuple[Mode, ...] = ()
    horizontal_mean: bool = True

    def build(self, grid: Grid, seed: int) -> SpectralField:
        if self.kind == "random":
            rho = random_field(grid, np.random.default_rng(seed), slope=self.slope, band=self.band)
        elif self.kind == "modes":
            if not self.modes:
                raise ConfigurationError("Initial condition of kind 'modes' lists no modes")
            scale = TWO_PI / grid.length

            def values(*x):
                total = 0.0
                for mode in self.modes:
                    if len(mode.wavevector) != grid.dimension:
                        raise ConfigurationError(f"Mode {mode.wavevector} does not match dimension {grid.dimension}")
                    phase = sum(n * scale * xi for n, xi in zip(mode.wavevector, x))
                    total = total + mode.amplitude * np.cos(phase + mode.phase)
                return total

            rho = sample(grid, values)
        else:
            raise ConfigurationError(f"Unknown initial condition kind '{self.kind}'")
        if not self.horizontal_mean:
            rho, _ = bar_tilde_split(rho)
        rho = rho.with_coefficients(rho.coefficients * grid.dealias_mask)
        norm = sobolev_norm(rho, self.norm_index)
        if norm == 0 or self.epsilon == 0:
            return SpectralField.zeros(grid)
        return rho * (self.epsilon / norm)


@dataclass(frozen=True)
class SimConfig:
    dimension: int = 2
    points: int = 64
    length: float = TWO_PI
    profile: StratifiedProfile = field(default_factory=lambda: linear(1.0))
    initial: InitialCondition = field(default_factory=InitialCondition)
    t_end: float = 10.0
    dt: Optional[float] = None
    cfl_safety: Optional[float] = None
    diagnostic_stride: int = 10
    checkpoint_stride: int = 0
    norms: Sequence[float] = DEFAULT_NORMS
    split_index: float = 4.0
    energy_index: Optional[float] = 4.0
    nonlinear: bool = True
    dealias: bool = True
    seed: int = 0
    fit_window: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.initial.epsilon < 0:
            raise ConfigurationError(f"epsilon must be nonnegative, got {self.initial.epsilon}")
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"Fixed dt must be positive, got {self.dt}")
        if not 0 < self.safety <= 1:
            raise ConfigurationError(f"CFL safety factor must lie in (0, 1], got {self.safety}")
        if self.diagnostic_stride < 1:
            raise ConfigurationError("diagnostic_stride must be at least 1")
        if self.checkpoint_stride < 0:
            raise ConfigurationError("checkpoint_stride must be nonnegative")
        Grid(self.dimension, self.points, self.length)

    @property
    def safety(self) -> float:
        return settings.IPM_CFL_SAFETY if self.cfl_safety is None else self.cfl_safety

    @property
    def grid(self) -> Grid:
        return Grid(self.dimension, self.points, self.length)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "points": self.points,
            "length": self.length,
            "profile": self.profile.to_dict(),
            "initial": {
                "kind": self.initial.kind,
                "epsilon": self.initial.epsilon,
                "norm_index": self.initial.norm_index,
                "band": self.initial.band,
                "slope": self.initial.slope,
                "modes": [
                    {"wavevector": list(m.wavevector), "amplitude": m.amplitude, "phase": m.phase}
                    for m in self.initial.modes
                ],
                "horizontal_mean": self.initial.horizontal_mean,
            },
            "t_end": self.t_end,
            "dt": self.dt,
            "cfl_safety": self.safety,
            "diagnostic_stride": self.diagnostic_stride,
            "checkpoint_stride": self.checkpoint_stride,
            "norms": [float(s) for s in self.norms],
            "split_index": self.split_index,
            "energy_index": self.energy_index,
            "nonlinear": self.nonlinear,
            "dealias": self.dealias,
            "seed": self.seed,
            "fit_window": list(self.fit_window) if self.fit_window else None,
        }
