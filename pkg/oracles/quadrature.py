"""
∫₀^{2π} |cos θ|^k e^{-cos²θ t} dθ by adaptive quadrature.

By symmetry the integral is 4∫₀^{π/2} sin^k φ e^{-sin²φ t} dφ; the mass sits in
a layer of width t^{-1/2} at φ = 0, so the interval is cut at 2^i/√t.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence, Tuple

from scipy.integrate import quad
from scipy.special import gamma

from core_utils.exceptions import DomainError, QuadratureError

RELATIVE_TOLERANCE = 1e-10
REQUIRED_TOLERANCE = 1e-9


def panel_quad(function: Callable[[float], float], breakpoints: Sequence[float]) -> Tuple[float, float]:
    """Sum of scipy quad over consecutive panels; returns (value, error)."""
    value = error = 0.0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b <= a:
            continue
        piece, piece_error = quad(function, a, b, epsabs=0.0, epsrel=RELATIVE_TOLERANCE, limit=200)
        value += piece
        error += piece_error
    return value, error


def _layer_breakpoints(scale: float, upper: float) -> list:
    points = [0.0]
    h = scale / 4.0
    while h < upper:
        points.append(h)
        h *= 2.0
    points.append(upper)
    return points


def angular_integral(k: int, t: float) -> float:
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if k < 0:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    if t == 0:
        # ∫₀^{2π}|cos θ|^k dθ = 2√π Γ((k+1)/2)/Γ(k/2+1)
        return float(2.0 * math.sqrt(math.pi) * gamma(0.5 * (k + 1)) / gamma(0.5 * k + 1.0))

    def integrand(phi):
        s = math.sin(phi)
        return s ** k * math.exp(-s * s * t)

    value, error = panel_quad(integrand, _layer_breakpoints(1.0 / math.sqrt(t), 0.5 * math.pi))
    value *= 4.0
    error *= 4.0
    if error > REQUIRED_TOLERANCE * value:
        raise QuadratureError(error, REQUIRED_TOLERANCE * value)
    return value


def laplace_constant(k: int) -> float:
    """c_k = 2Γ((k+1)/2): angular_integral(k, t) ~ c_k t^{-(k+1)/2}."""
    return float(2.0 * gamma(0.5 * (k + 1)))
