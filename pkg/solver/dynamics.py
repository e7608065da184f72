"""
Right-hand side of the perturbation equation around Ω(y) = K y + ω(y):

    ∂ₜρ = -Ω′(y) u_v - u·∇ρ,

u_v the vertical velocity (u₂ in 2D, u₃ in 3D). The constant-slope part
-K u_v = -K 𝒫ρ is a Fourier multiplier and is left to the integrator; the
remainder N(ρ) = -ω′(y) u_v - u·∇ρ is formed in physical space and truncated
by the 2/3 rule.
"""
from __future__ import annotations

import logging

import numpy as np

from core_utils.exceptions import BlowUpError
from spectral.fields import SpectralField, transform_forward, transform_inverse
from spectral.grid import Grid
from spectral.multipliers import horizontal_projection
from spectral.operators import Velocity, bar_tilde_split, gradient, l2_norm, velocity_from_density
from stability.profiles import StratifiedProfile

logger = logging.getLogger(__name__)


class PerturbationDynamics:
    def __init__(self, grid: Grid, profile: StratifiedProfile, nonlinear: bool = True, dealias: bool = True):
        self.grid = grid
        self.profile = profile
        self.nonlinear = nonlinear
        self.dealias = dealias
        self.projection = horizontal_projection().evaluate(grid).real
        shape = [1] * grid.dimension
        shape[grid.vertical_axis] = grid.points
        variable = profile.slope(grid.axis_coordinates) - profile.K
        self._variable_slope = variable.reshape(shape)
        self._has_variable_slope = bool(np.any(variable != 0))

    @property
    def linear_symbol(self) -> np.ndarray:
        """Symbol of the exactly integrated part: -K·𝒫."""
        return -self.profile.K * self.projection

    def _to_spectral(self, values: np.ndarray) -> np.ndarray:
        coefficients = transform_forward(values, self.grid).coefficients.copy()
        if self.dealias:
            coefficients *= self.grid.dealias_mask
        coefficients[self.grid.zero_mode] = 0.0
        return coefficients

    def transport(self, rho: SpectralField, velocity: Velocity | None = None) -> np.ndarray:
        """Physical samples of u·∇ρ."""
        velocity = velocity_from_density(rho) if velocity is None else velocity
        return sum(transform_inverse(u) * d for u, d in zip(velocity, gradient(rho)))

    def nonlinear_part(self, rho: SpectralField, t: float = 0.0) -> SpectralField:
        """N(ρ); everything except the multiplier -K𝒫ρ."""
        if not rho.is_finite():
            raise BlowUpError(t, rho.max_coefficient)
        if not (self._has_variable_slope or self.nonlinear):
            return SpectralField.zeros(self.grid)
        physical = np.zeros(self.grid.shape)
        velocity = None
        if self._has_variable_slope or self.nonlinear:
            velocity = velocity_from_density(rho)
        if self._has_variable_slope:
            physical = physical - self._variable_slope * transform_inverse(velocity[-1])
        if self.nonlinear:
            physical = physical - self.transport(rho, velocity)
        result = rho.with_coefficients(self._to_spectral(physical))
        if not result.is_finite():
            raise BlowUpError(t, result.max_coefficient)
        return result

    def rhs(self, rho: SpectralField, t: float = 0.0) -> SpectralField:
        """Full right-hand side -Ω′u_v - u·∇ρ; its mean mode is 0."""
        linear = rho.with_coefficients(self.linear_symbol * rho.coefficients)
        return linear + self.nonlinear_part(rho, t)

    def tilde_tendency_residual(self, rho: SpectralField) -> float:
        """
        |(∂ₜρ)~ + ∂_v(u_v ρ̄)~|_{L²}: the horizontally averaged tendency is the
        vertical flux divergence of the oscillating part.
        """
        _, tendency = bar_tilde_split(self.rhs(rho))
        bar, _ = bar_tilde_split(rho)
        flux = transform_inverse(velocity_from_density(rho)[-1]) * transform_inverse(bar)
        k_vertical = self.grid.wavevector[self.grid.vertical_axis]
        divergence = rho.with_coefficients(1j * k_vertical * self._to_spectral(flux))
        _, divergence_tilde = bar_tilde_split(divergence)
        return l2_norm(tendency + divergence_tilde)
