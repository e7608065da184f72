"""Stationary states of unforced IPM on the torus: residual, energy identity, classification."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from spectral.fields import SpectralField, l2_inner, transform_inverse
from spectral.operators import bar_tilde_split, gradient, l2_norm, sobolev_norm, velocity_from_density

RESIDUAL_TOLERANCE = 1e-12


def transport_term(rho: SpectralField) -> np.ndarray:
    """Physical samples of u·∇ρ with u = velocity_from_density(ρ)."""
    velocity = [transform_inverse(component) for component in velocity_from_density(rho)]
    return sum(u * d for u, d in zip(velocity, gradient(rho)))


def stationarity_residual(rho: SpectralField) -> float:
    """|u·∇ρ|_{L²}, evaluated pseudo-spectrally on the grid."""
    residual = transport_term(rho)
    return float(math.sqrt(rho.grid.cell_volume * np.sum(residual * residual)))


def energy_identity_check(rho: SpectralField) -> Tuple[float, float]:
    """(∫ u_vertical ρ, ∫ |u|²); equal for every ρ."""
    velocity = velocity_from_density(rho)
    return l2_inner(velocity[-1], rho), sum(l2_inner(c, c) for c in velocity)


@dataclass(frozen=True)
class StationaryReport:
    residual: float
    velocity_norm: float
    bar_norm: float
    stationary: bool
    x_independent: bool
    classification: str

    def to_dict(self) -> dict:
        return asdict(self)


def classify_stationary(rho: SpectralField, tolerance: float = RESIDUAL_TOLERANCE) -> StationaryReport:
    """
    On the torus a stationary state is generically x-independent, in which
    case u ≡ 0 and ρ̄ ≡ 0; single horizontal harmonics are the degenerate
    exception (stationary with ρ̄ ≠ 0).
    """
    residual = stationarity_residual(rho)
    bar, _ = bar_tilde_split(rho)
    bar_norm = l2_norm(bar)
    velocity_norm = math.sqrt(sum(l2_norm(c) ** 2 for c in velocity_from_density(rho)))
    stationary = residual <= tolerance * max(1.0, sobolev_norm(rho, 2.0) ** 2)
    x_independent = bar_norm <= tolerance * max(1.0, l2_norm(rho))
    if x_independent:
        classification = "stratified"
    elif stationary:
        classification = "degenerate-stationary"
    else:
        classification = "non-stationary"
    return StationaryReport(
        residual=residual,
        velocity_norm=velocity_norm,
        bar_norm=bar_norm,
        stationary=stationary,
        x_independent=x_independent,
        classification=classification,
    )
