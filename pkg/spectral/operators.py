"""
Norms, velocity reconstruction and the horizontal-average split.

Velocity law (damping sign convention, see DESIGN.md):
  2D: û1 = -(k1 k2/|k|²) ρ̂,  û2 = +(k1²/|k|²) ρ̂
  3D: û1 = -(k1 k3/|k|²) ρ̂,  û2 = -(k2 k3/|k|²) ρ̂,  û3 = +((k1²+k2²)/|k|²) ρ̂
"""
from __future__ import annotations

from functools import lru_cache
from typing import Tuple

import numpy as np

from core_utils.exceptions import DomainError

from .fields import SpectralField, transform_inverse
from .grid import Grid
from .multipliers import apply_multiplier, horizontal_projection, riesz_product

Velocity = Tuple[SpectralField, ...]


@lru_cache(maxsize=64)
def _sobolev_weights(grid: Grid, s: float) -> np.ndarray:
    return (1.0 + grid.wavenumber_squared) ** s


def sobolev_norm(f: SpectralField, s: float = 0.0) -> float:
    """|f|_{H^s}² = L^d Σ (1+|k|²)^s |c(k)|²."""
    if s < 0:
        raise DomainError(f"Sobolev index must be nonnegative, got {s}")
    power = np.abs(f.coefficients) ** 2
    if s:
        power = power * _sobolev_weights(f.grid, float(s))
    return float(np.sqrt(f.grid.volume * power.sum()))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def vector_sobolev_norm(components: Velocity, s: float = 0.0) -> float:
    return float(np.sqrt(sum(sobolev_norm(c, s) ** 2 for c in components)))


def velocity_from_density_2d(rho: SpectralField) -> Tuple[SpectralField, SpectralField]:
    if rho.grid.dimension != 2:
        raise DomainError("velocity_from_density_2d needs a 2D field")
    u1 = apply_multiplier(rho, riesz_product(0, 1))
    u2 = apply_multiplier(rho, horizontal_projection())
    return u1, u2


def velocity_from_density_3d(rho: SpectralField) -> Tuple[SpectralField, SpectralField, SpectralField]:
    if rho.grid.dimension != 3:
        raise DomainError("velocity_from_density_3d needs a 3D field")
    u1 = apply_multiplier(rho, riesz_product(0, 2))
    u2 = apply_multiplier(rho, riesz_product(1, 2))
    u3 = apply_multiplier(rho, horizontal_projection())
    return u1, u2, u3


def velocity_from_density(rho: SpectralField) -> Velocity:
    if rho.grid.dimension == 2:
        return velocity_from_density_2d(rho)
    return velocity_from_density_3d(rho)


def divergence_defect(velocity: Velocity) -> float:
    """max_k |k·û(k)|."""
    grid = velocity[0].grid
    divergence = sum(k * u.coefficients for k, u in zip(grid.wavevector, velocity))
    return float(np.max(np.abs(divergence)))


def bar_tilde_split(rho: SpectralField) -> Tuple[SpectralField, SpectralField]:
    """
    (ρ̄, ρ̃): ρ̃ is the horizontal average (a function of the vertical coordinate),
    ρ̄ = ρ - ρ̃ carries every mode with nonzero horizontal wavenumber.
    """
    mask = rho.grid.vertical_mean_mask
    tilde = rho.with_coefficients(np.where(mask, rho.coefficients, 0.0))
    bar = rho.with_coefficients(np.where(mask, 0.0, rho.coefficients))
    return bar, tilde


def gradient(f: SpectralField) -> Tuple[np.ndarray, ...]:
    """Physical samples of ∂_j f for every axis (spectral differentiation)."""
    return tuple(
        transform_inverse(f.with_coefficients(1j * k * f.coefficients)) for k in f.grid.wavevector
    )


def grad_linf(f: SpectralField) -> float:
    components = gradient(f)
    return float(np.sqrt(sum(c * c for c in components)).max())


def horizontal_derivative_l2(f: SpectralField) -> float:
    """|∂x f|_{L²}."""
    k1 = f.grid.wavevector[0]
    return float(np.sqrt(f.grid.volume * np.sum(k1 * k1 * np.abs(f.coefficients) ** 2)))


def periodic_derivative(samples: np.ndarray, length: float, order: int, noise_floor: float = 1e-13) -> np.ndarray:
    """
    order-th derivative of 1D periodic samples by spectral differentiation.

    Coefficients below noise_floor·max|c| are dropped first; high orders would
    otherwise amplify rounding noise at the Nyquist end by N^order.
    """
    samples = np.asarray(samples, dtype=np.float64)
    coefficients = np.fft.fft(samples)
    if order == 0:
        return samples.copy()
    scale = np.abs(coefficients).max()
    coefficients = np.where(np.abs(coefficients) >= noise_floor * scale, coefficients, 0.0)
    n = samples.size
    k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
    if n % 2 == 0:
        # the Nyquist mode has no consistent odd derivative
        k[n // 2] = 0.0
    return np.fft.ifft(coefficients * (1j * k) ** order).real
