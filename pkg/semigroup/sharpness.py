"""Sharpness families for the t^{-1/4} decay rate of e^{Rt} on ℝ²."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from core_utils.exceptions import DomainError

from .whole_space import RadialAngularSpec, whole_space_norm


@dataclass(frozen=True)
class SharpnessReport:
    t: float
    value: float
    scaled: float
    floor: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def sharpness_radial(
    radial: Callable[[np.ndarray], np.ndarray], t: float, r_max: float, weight: str = "identity"
) -> SharpnessReport:
    """
    Ratio |w e^{Rt} ρ₀| / |ρ₀| for a radial datum ρ̂₀(r). scaled is the ratio
    times (1+t)^{(1+2p)/4}, which tends to a positive constant.
    """
    spec = RadialAngularSpec(profile=lambda r, theta: radial(r) * np.ones_like(theta), r_max=r_max, name="radial")
    ratio = whole_space_norm(spec, t, weight).value / whole_space_norm(spec, 0.0).value
    power = {"identity": 0, "R1": 1, "R1squared": 2}[weight]
    return SharpnessReport(t=float(t), value=ratio, scaled=ratio * (1.0 + t) ** ((1 + 2 * power) / 4.0))


def sharpness_concentrated(t: float, nodes: int = 64) -> SharpnessReport:
    """
    Datum of unit mass whose transform lives on the sector |θ - π/2| ≤ 1/(t+1).
    Its squared ratio is the sector average of e^{-2cos²θ t}; floor is the
    pointwise bound e^{-t/(t+1)²} ≥ e^{-1/4}.
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    half = 1.0 / (t + 1.0)
    x, w = leggauss(nodes)
    theta = 0.5 * math.pi + half * x
    mean = 0.5 * float(np.sum(w * np.exp(-2.0 * np.cos(theta) ** 2 * t)))
    value = math.sqrt(mean)
    return SharpnessReport(t=float(t), value=value, scaled=value, floor=math.exp(-t / (t + 1.0) ** 2))
