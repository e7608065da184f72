"""
Stratified background profiles Ω(y) = K y + ω(y), ω 2π-periodic.

Derivatives of ω come from an analytic evaluator when the constructor knows
one, otherwise from spectral differentiation of periodic samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from core_utils.exceptions import ConfigurationError, DomainError
from spectral.grid import TWO_PI
from spectral.operators import periodic_derivative

MAX_DERIVATIVE_ORDER = 21

DerivativeEvaluator = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class StratifiedProfile:
    K: float
    omega: DerivativeEvaluator = field(compare=False)
    name: str = "profile"
    description: dict = field(default_factory=dict, compare=False)

    def derivative(self, y, order: int = 0) -> np.ndarray:
        """Ω^{(order)}(y) for 0 ≤ order ≤ 21."""
        if not 0 <= order <= MAX_DERIVATIVE_ORDER:
            raise DomainError(f"Derivative order must lie in [0, {MAX_DERIVATIVE_ORDER}], got {order}")
        y = np.asarray(y, dtype=np.float64)
        values = np.asarray(self.omega(y, order), dtype=np.float64)
        if order == 0:
            return self.K * y + values
        if order == 1:
            return self.K + values
        return values

    def __call__(self, y) -> np.ndarray:
        return self.derivative(y, 0)

    def slope(self, y) -> np.ndarray:
        return self.derivative(y, 1)

    @property
    def is_linear(self) -> bool:
        return self.description.get("kind") == "linear"

    def to_dict(self) -> dict:
        return {"name": self.name, "K": self.K, **self.description}


def linear(K: float) -> StratifiedProfile:
    return StratifiedProfile(
        K=K,
        omega=lambda y, order: np.zeros_like(y),
        name=f"{K:g}y",
        description={"kind": "linear"},
    )


def linear_plus_sine(K: float, amplitude: float = 1.0, frequency: int = 1) -> StratifiedProfile:
    """Ω = K y + a sin(m y)."""
    if frequency != int(frequency) or frequency < 1:
        raise ConfigurationError(f"Frequency must be a positive integer for a periodic ω, got {frequency}")

    def omega(y, order):
        return amplitude * frequency ** order * np.sin(frequency * y + 0.5 * math.pi * order)

    return StratifiedProfile(
        K=K,
        omega=omega,
        name=f"{K:g}y+{amplitude:g}sin({frequency}y)",
        description={"kind": "linear_plus_sine", "amplitude": amplitude, "frequency": frequency},
    )


def from_samples(K: float, samples, length: float = TWO_PI, name: Optional[str] = None) -> StratifiedProfile:
    """
    ω from periodic samples on [-length/2, length/2); values between samples
    come from the trigonometric interpolant.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size < 8:
        raise ConfigurationError("ω samples must be a 1D array of at least 8 values")
    n = samples.size
    derivatives = [periodic_derivative(samples, length, j) for j in range(MAX_DERIVATIVE_ORDER + 1)]
    coefficients = [np.fft.fft(d) / n for d in derivatives]
    k = np.fft.fftfreq(n, d=1.0 / n) * (TWO_PI / length)

    def omega(y, order):
        # trigonometric interpolation of the sampled derivative
        shifted = np.asarray(y, dtype=np.float64)[..., None] + 0.5 * length
        modes = np.exp(1j * shifted * k)
        return np.real(modes @ coefficients[order])

    return StratifiedProfile(
        K=K, omega=omega, name=name or f"{K:g}y+sampled", description={"kind": "samples", "points": n}
    )
