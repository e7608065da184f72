"""
Fourier multipliers and the operator library built on them.

A symbol receives the grid wavevector components (k1, k2[, k3]) and a safe
|k|² (the zero mode replaced by 1) and returns an array over the grid. The
zero mode is always overwritten with `zero_mode`, so Riesz-type symbols are 0
there and the mean of a field is carried separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from core_utils.exceptions import NonFiniteSymbolError

from .fields import SpectralField, wavevector_at
from .grid import Grid

Symbol = Callable[[Tuple[np.ndarray, ...], np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FourierMultiplier:
    name: str
    symbol: Symbol = field(compare=False)
    zero_mode: complex = 0.0

    def evaluate(self, grid: Grid) -> np.ndarray:
        k = grid.wavevector
        k_sq = np.where(grid.wavenumber_squared == 0, 1.0, grid.wavenumber_squared)
        with np.errstate(all="ignore"):
            values = np.array(np.broadcast_to(self.symbol(k, k_sq), grid.shape), dtype=np.complex128)
        values[grid.zero_mode] = self.zero_mode
        bad = ~np.isfinite(values)
        if bad.any():
            index = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NonFiniteSymbolError(self.name, wavevector_at(grid, index))
        return values

    def __mul__(self, other: "FourierMultiplier") -> "FourierMultiplier":
        return FourierMultiplier(
            name=f"{self.name}*{other.name}",
            symbol=lambda k, k_sq: self.symbol(k, k_sq) * other.symbol(k, k_sq),
            zero_mode=self.zero_mode * other.zero_mode,
        )


def apply_multiplier(f: SpectralField, m: FourierMultiplier) -> SpectralField:
    return f.with_coefficients(m.evaluate(f.grid) * f.coefficients)


def identity() -> FourierMultiplier:
    return FourierMultiplier("identity", lambda k, k_sq: np.ones_like(k_sq), zero_mode=1.0)


def riesz(axis: int) -> FourierMultiplier:
    """R_j, symbol -i k_j/|k|; axis is 0-based."""
    return FourierMultiplier(f"R{axis + 1}", lambda k, k_sq: -1j * k[axis] / np.sqrt(k_sq))


def riesz_product(first: int, second: int) -> FourierMultiplier:
    """R_i R_j, symbol -k_i k_j/|k|²."""
    return FourierMultiplier(
        f"R{first + 1}R{second + 1}", lambda k, k_sq: -k[first] * k[second] / k_sq
    )


def horizontal_projection() -> FourierMultiplier:
    """Positive operator with symbol (k1² [+ k2²])/|k|², i.e. -(R1² [+ R2²])."""

    def symbol(k, k_sq):
        horizontal = sum(component ** 2 for component in k[:-1])
        return horizontal / k_sq

    return FourierMultiplier("P_h", symbol)


def operator_r() -> FourierMultiplier:
    """R = ∂xx(-Δ)^{-1}, symbol -k1²/|k|²."""
    return FourierMultiplier("R", lambda k, k_sq: -k[0] ** 2 / k_sq)


def derivative(axis: int, order: int = 1) -> FourierMultiplier:
    return FourierMultiplier(
        f"d{axis + 1}^{order}",
        lambda k, k_sq: (1j * k[axis]) ** order,
        zero_mode=1.0 if order == 0 else 0.0,
    )


def fractional_laplacian(power: float) -> FourierMultiplier:
    """Λ^power, symbol |k|^power."""
    return FourierMultiplier(
        f"Lambda^{power:g}",
        lambda k, k_sq: k_sq ** (0.5 * power),
        zero_mode=1.0 if power == 0 else 0.0,
    )


def sobolev_weight(s: float) -> FourierMultiplier:
    """(1+|k|²)^{s/2}; its zero mode is 1."""
    return FourierMultiplier(
        f"H^{s:g}", lambda k, k_sq: (1.0 + sum(c * c for c in k)) ** (0.5 * s), zero_mode=1.0
    )


def semigroup(t: float, rate: float = 1.0) -> FourierMultiplier:
    """
    e^{-rate (horizontal |k|²/|k|²) t}: the linearized IPM propagator on 𝕋² and 𝕋³.

    Modes with zero horizontal wavenumber, including k = 0, are left unchanged.
    """

    def symbol(k, k_sq):
        horizontal = sum(component ** 2 for component in k[:-1])
        return np.exp(-rate * t * horizontal / k_sq)

    return FourierMultiplier(f"exp(-{rate:g}P_h t={t:g})", symbol, zero_mode=1.0)


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coefficients(f.coefficients * f.grid.dealias_mask)


