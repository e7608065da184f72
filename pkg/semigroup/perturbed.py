"""
The perturbed linear flow ∂ₜρ = (1 - G(y, t)) R_h² ρ on the torus.

R_h² is R1² in 2D and R1² + R2² in 3D, i.e. minus the horizontal projection
symbol. The coefficient G depends only on the vertical coordinate (and
possibly time), must be small in C^11, and the datum must have zero
horizontal mean. Time stepping is classical RK4 with the product formed in
physical space and truncated by the 2/3 rule.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, List, Sequence, Tuple

import numpy as np
from django.conf import settings

from core_utils.exceptions import DomainError, PreconditionError, StabilityError
from spectral.fields import SpectralField, transform_forward, transform_inverse
from spectral.grid import Grid
from spectral.multipliers import dealias, horizontal_projection
from spectral.operators import bar_tilde_split, l2_norm, periodic_derivative

logger = logging.getLogger(__name__)

CERTIFICATE_ORDER = 11
DEFAULT_DT = 0.5


@dataclass(frozen=True)
class PerturbationCoefficient:
    """G(y, t); `function` receives vertical coordinates and a time."""

    function: Callable[[np.ndarray, float], np.ndarray] = field(compare=False)
    name: str = "G"
    time_dependent: bool = False

    def vertical_samples(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        y = grid.axis_coordinates
        return np.broadcast_to(np.asarray(self.function(y, t), dtype=np.float64), y.shape)

    def sample(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        """G broadcast over the full grid along the vertical axis."""
        shape = [1] * grid.dimension
        shape[grid.vertical_axis] = grid.points
        return self.vertical_samples(grid, t).reshape(shape)

    def certificate(self, grid: Grid, times: Iterable[float] = (0.0,), order: int = CERTIFICATE_ORDER) -> float:
        """max over times and j ≤ order of sup_y |∂_y^j G|."""
        worst = 0.0
        for t in times:
            samples = self.vertical_samples(grid, float(t))
            for j in range(order + 1):
                worst = max(worst, float(np.abs(periodic_derivative(samples, grid.length, j)).max()))
        return worst


class PerturbedEvolution:
    def __init__(
        self,
        grid: Grid,
        coefficient: PerturbationCoefficient,
        *,
        dt: float = DEFAULT_DT,
        delta: float | None = None,
        growth_tolerance: float = 1e-6,
    ):
        if dt <= 0:
            raise DomainError(f"Time step must be positive, got {dt}")
        self.grid = grid
        self.coefficient = coefficient
        self.dt = dt
        self.delta = settings.IPM_PERTURBATION_DELTA if delta is None else delta
        self.growth_tolerance = growth_tolerance
        self._symbol = -horizontal_projection().evaluate(grid)
        self.certificate = self._checked_certificate(0.0)

    def _checked_certificate(self, t: float) -> float:
        value = self.coefficient.certificate(self.grid, (t,))
        if value > self.delta * (1.0 + 1e-9):
            raise PreconditionError(
                f"Coefficient '{self.coefficient.name}' has C^{CERTIFICATE_ORDER} size {value:.6g} "
                f"at t = {t:g}, above the smallness threshold {self.delta:g}"
            )
        return value

    def rhs(self, rho: SpectralField, t: float) -> SpectralField:
        riesz = transform_inverse(rho.with_coefficients(self._symbol * rho.coefficients))
        product = (1.0 - self.coefficient.sample(self.grid, t)) * riesz
        return dealias(transform_forward(product, self.grid))

    def step(self, rho: SpectralField, t: float, dt: float | None = None) -> SpectralField:
        dt = self.dt if dt is None else dt
        k1 = self.rhs(rho, t)
        k2 = self.rhs(rho + (0.5 * dt) * k1, t + 0.5 * dt)
        k3 = self.rhs(rho + (0.5 * dt) * k2, t + 0.5 * dt)
        k4 = self.rhs(rho + dt * k3, t + dt)
        updated = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        before = l2_norm(rho)
        if before > 0:
            growth = l2_norm(updated) / before
            if growth > 1.0 + self.growth_tolerance:
                raise StabilityError(growth, dt)
        return updated

    def trajectory(
        self, rho0: SpectralField, t_end: float, sample_times: Sequence[float] | None = None
    ) -> Iterator[Tuple[float, SpectralField]]:
        """
        Yield (t, ρ(t)) at t = 0, at each sample time and at t_end. Steps are
        shortened to land exactly on sample times.
        """
        if t_end < 0:
            raise DomainError(f"t_end must be nonnegative, got {t_end}")
        if rho0.grid != self.grid:
            raise PreconditionError("Datum and evolution live on different grids")
        _, tilde = bar_tilde_split(rho0)
        if l2_norm(tilde) > 1e-12 * max(1.0, l2_norm(rho0)):
            raise PreconditionError("Datum must have zero horizontal mean")
        targets = sorted({float(t) for t in (() if sample_times is None else sample_times) if 0 < t < t_end} | {float(t_end)})
        rho, t = dealias(rho0), 0.0
        yield t, rho
        for target in targets:
            while t < target:
                dt = min(self.dt, target - t)
                rho = self.step(rho, t, dt)
                t = target if target - t - dt <= 1e-12 * max(1.0, target) else t + dt
                if self.coefficient.time_dependent:
                    self._checked_certificate(t)
            yield t, rho


def perturbed_propagate(
    rho0: SpectralField,
    coefficient: PerturbationCoefficient,
    t: float,
    dt: float = DEFAULT_DT,
    delta: float | None = None,
) -> SpectralField:
    evolution = PerturbedEvolution(rho0.grid, coefficient, dt=dt, delta=delta)
    *_, (_, final) = evolution.trajectory(rho0, t)
    return final


def perturbed_trajectory(
    rho0: SpectralField,
    coefficient: PerturbationCoefficient,
    sample_times: Sequence[float],
    dt: float = DEFAULT_DT,
    delta: float | None = None,
) -> List[dict]:
    """Norm history of the perturbed flow at the requested times."""
    evolution = PerturbedEvolution(rho0.grid, coefficient, dt=dt, delta=delta)
    t_end = max(sample_times) if len(sample_times) else 0.0
    rows = []
    for t, rho in evolution.trajectory(rho0, t_end, sample_times):
        _, tilde = bar_tilde_split(rho)
        rows.append({"t": t, "l2_norm": l2_norm(rho), "horizontal_mean": l2_norm(tilde)})
    logger.info(
        "Perturbed trajectory finished",
        extra={"coefficient": coefficient.name, "certificate": evolution.certificate, "samples": len(rows)},
    )
    return rows
