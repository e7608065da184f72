"""
Periodic grids on [-L/2, L/2)^d.

Axis 0 is x, axis 1 is y and (in 3D) axis 2 is z. With the default length
L = 2π the wavenumbers are the integers in [-N/2, N/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from core_utils.exceptions import ConfigurationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Grid:
    dimension: int
    points: int
    length: float = TWO_PI

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ConfigurationError(f"Grid dimension must be 2 or 3, got {self.dimension}")
        n = self.points
        if not isinstance(n, (int, np.integer)) or n < 8:
            raise ConfigurationError(f"Grid needs at least 8 points per axis, got {n}")
        if n & (n - 1):
            raise ConfigurationError(f"Points per axis must be a power of two, got {n}")
        if not self.length > 0:
            raise ConfigurationError(f"Box length must be positive, got {self.length}")

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def volume(self) -> float:
        return self.length ** self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def vertical_axis(self) -> int:
        """Axis along which the stratification varies (y in 2D, z in 3D)."""
        return self.dimension - 1

    @property
    def horizontal_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.dimension - 1))

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        return -0.5 * self.length + self.spacing * np.arange(self.points)

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, ...]:
        axes = [self.axis_coordinates] * self.dimension
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode numbers per axis in FFT order."""
        return np.fft.fftfreq(self.points, d=1.0 / self.points)

    @cached_property
    def wavevector(self) -> Tuple[np.ndarray, ...]:
        k = self.mode_numbers * (TWO_PI / self.length)
        return tuple(np.meshgrid(*([k] * self.dimension), indexing="ij"))

    @cached_property
    def wavenumber_squared(self) -> np.ndarray:
        return sum(k * k for k in self.wavevector)

    @cached_property
    def horizontal_wavenumber_squared(self) -> np.ndarray:
        return sum(self.wavevector[axis] ** 2 for axis in self.horizontal_axes)

    @cached_property
    def zero_mode(self) -> Tuple[int, ...]:
        return (0,) * self.dimension

    @cached_property
    def phase(self) -> np.ndarray:
        """e^{i k·L/2}: moves FFT coefficients to a grid origin at -L/2."""
        return np.exp(0.5j * self.length * sum(self.wavevector))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep modes with |n_j| < N/3 on every axis."""
        keep = np.abs(self.mode_numbers) < self.points / 3.0
        mask = keep
        for _ in range(self.dimension - 1):
            mask = np.multiply.outer(mask, keep)
        return mask

    @cached_property
    def vertical_mean_mask(self) -> np.ndarray:
        """Modes with zero horizontal wavenumber (the x-average, or xy-average in 3D)."""
        return self.horizontal_wavenumber_squared == 0

    def describe(self) -> dict:
        return {"dimension": self.dimension, "points": int(self.points), "length": float(self.length)}
