"""
Spectral fields: Fourier coefficients of real scalar fields on a periodic grid.

Normalization: f(x) = Σ_k c(k) e^{i k·x}, so c(k) is the true Fourier
coefficient (forward transform scaled by 1/N^d and phase-shifted to the grid
origin at -L/2). Parseval then reads ∫|f|² = L^d Σ|c(k)|² exactly, matching the
discrete quadrature Δx^d Σ|f(x_j)|².
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.fft
from django.conf import settings

from core_utils.exceptions import ConfigurationError

from .grid import Grid

NORMALIZATION_TAG = "forward"


def _workers() -> int:
    return getattr(settings, "IPM_FFT_WORKERS", 1)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable carrier of ρ, ψ, velocity components and their splits."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=np.complex128)
        if coefficients.shape != self.grid.shape:
            raise ConfigurationError(
                f"Coefficient shape {coefficients.shape} does not match grid {self.grid.shape}"
            )
        if coefficients.flags.writeable:
            coefficients = coefficients.copy()
            coefficients.flags.writeable = False
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def with_coefficients(self, coefficients: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coefficients)

    def physical(self) -> np.ndarray:
        return transform_inverse(self)

    @property
    def mean(self) -> float:
        return float(self.coefficients[self.grid.zero_mode].real)

    @property
    def max_coefficient(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coefficients)))

    def hermitian_defect(self) -> float:
        """max_k |c(-k) - conj(c(k))|; zero for a real field."""
        c = self.coefficients
        mirrored = c
        for axis in range(c.ndim):
            mirrored = np.roll(np.flip(mirrored, axis=axis), 1, axis=axis)
        return float(np.max(np.abs(mirrored - np.conj(c))))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coefficients(self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coefficients(self.coefficients - other.coefficients)

    def __neg__(self) -> "SpectralField":
        return self.with_coefficients(-self.coefficients)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coefficients(self.coefficients * scalar)

    __rmul__ = __mul__


def transform_forward(values: np.ndarray, grid: Grid) -> SpectralField:
    """Real physical samples → Hermitian Fourier coefficients."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ConfigurationError(
            f"Physical array shape {values.shape} does not match grid shape {grid.shape}"
        )
    if np.iscomplexobj(values):
        raise ConfigurationError("Physical values must be real")
    coefficients = scipy.fft.fftn(values.astype(np.float64), norm="forward", workers=_workers())
    return SpectralField(grid, coefficients * grid.phase)


def transform_inverse(field: SpectralField) -> np.ndarray:
    samples = scipy.fft.ifftn(
        field.coefficients * np.conj(field.grid.phase), norm="forward", workers=_workers()
    )
    return samples.real


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """∫ f g over the box, evaluated on the Fourier side."""
    return float(f.grid.volume * np.real(np.vdot(g.coefficients, f.coefficients)))


def sample(grid: Grid, function) -> SpectralField:
    """Transform `function(*coordinates)` sampled on the grid."""
    return transform_forward(np.broadcast_to(function(*grid.coordinates), grid.shape), grid)


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    *,
    slope: float = 6.0,
    band: float | None = None,
    zero_mean: bool = True,
) -> SpectralField:
    """
    Real random field with |c(k)| ∝ (1+|k|)^{-slope}, cut at |n| ≤ band.

    Hermitian symmetry is obtained by drawing white noise in physical space.
    """
    noise = transform_forward(rng.standard_normal(grid.shape), grid).coefficients
    modulus = np.sqrt(grid.wavenumber_squared)
    envelope = (1.0 + modulus) ** (-slope)
    if band is not None:
        mode_radius = modulus * grid.length / (2.0 * np.pi)
        envelope = np.where(mode_radius <= band, envelope, 0.0)
    envelope = envelope * grid.dealias_mask
    coefficients = noise * envelope * grid.points ** (grid.dimension / 2)
    if zero_mean:
        coefficients[grid.zero_mode] = 0.0
    return SpectralField(grid, coefficients)


def wavevector_at(grid: Grid, index: Tuple[int, ...]) -> Tuple[float, ...]:
    return tuple(float(k[index]) for k in grid.wavevector)
