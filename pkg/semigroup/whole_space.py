"""
Whole-space linear decay evaluated by quadrature on the Fourier side.

A datum is given through its Fourier transform in polar form ρ̂₀(r, θ) (2D, θ
measured from the ξ1 axis) or axisymmetric form ρ̂₀(r, θ) (3D, θ the polar
angle from the vertical axis). By Plancherel

    |w(D) e^{Rt} ρ₀|²_{L²} = ∫∫ e^{-2 a(θ) t} w(θ)² |ρ̂₀(r, θ)|² J(r, θ) dr dθ

with a(θ) = cos²θ, J = r in 2D and a(θ) = sin²θ, J = 2π r² sinθ in 3D. The
decay concentrates where a(θ) vanishes, so angular panels refine dyadically
towards those angles at the scale 1/√(2t+1).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ive

from core_utils.exceptions import ConfigurationError, DomainError, QuadratureError
from spectral.grid import Grid

logger = logging.getLogger(__name__)

Profile = Callable[[np.ndarray, np.ndarray], np.ndarray]

WEIGHT_POWERS = {"identity": 0, "R1": 1, "R1squared": 2}

LOW_ORDER = 24
HIGH_ORDER = 48
RADIAL_PANELS = 8

# a periodic box resolves wavenumbers up to this fraction of r_max
BOX_CUTOFF = 0.6
MAX_BOX_POINTS = 4096


@dataclass(frozen=True)
class RadialAngularSpec:
    profile: Profile = field(compare=False)
    r_max: float
    name: str = "profile"
    dimension: int = 2
    tail_tolerance: float = 1e-10

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ConfigurationError(f"Whole-space dimension must be 2 or 3, got {self.dimension}")
        if not self.r_max > 0:
            raise ConfigurationError(f"r_max must be positive, got {self.r_max}")

    def validate(self) -> float:
        """
        Relative L² mass of the profile on [r_max, 4 r_max]. Raises when it
        exceeds tail_tolerance, since the quadrature truncates there.
        """
        inner = _mass(self, 0.0, self.r_max)
        outer = _mass(self, self.r_max, 4.0 * self.r_max)
        if inner <= 0:
            raise ConfigurationError(f"Profile '{self.name}' has no mass below r_max")
        ratio = outer / inner
        if ratio > self.tail_tolerance:
            raise ConfigurationError(
                f"Profile '{self.name}' carries relative mass {ratio:.3g} beyond "
                f"r_max = {self.r_max}; tolerance is {self.tail_tolerance:.1g}"
            )
        return ratio


@dataclass(frozen=True)
class NormEstimate:
    t: float
    value: float
    error: float
    converged: bool
    weight: str
    lambda_power: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _panel_nodes(breakpoints: Sequence[float], order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    nodes, weights = [], []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _angular_breakpoints(t: float, centers: Sequence[float], lower: float, upper: float) -> np.ndarray:
    width = 1.0 / math.sqrt(2.0 * t + 1.0)
    points = {lower, upper, *centers}
    for center in centers:
        h = width / 8.0
        while h < upper - lower:
            for p in (center - h, center + h):
                if lower < p < upper:
                    points.add(p)
            h *= 2.0
    return np.array(sorted(points))


def _angular_layout(dimension: int, t: float):
    if dimension == 2:
        breakpoints = _angular_breakpoints(t, (0.5 * math.pi, 1.5 * math.pi), 0.0, 2.0 * math.pi)
        return breakpoints, np.cos, lambda r, theta: r
    breakpoints = _angular_breakpoints(t, (0.0, math.pi), 0.0, math.pi)
    return breakpoints, np.sin, lambda r, theta: 2.0 * math.pi * r * r * np.sin(theta)


def _mass(spec: RadialAngularSpec, r_low: float, r_high: float) -> float:
    return _integrate(spec, 0.0, 0, 0.0, LOW_ORDER, (r_low, r_high))


def _integrate(
    spec: RadialAngularSpec,
    t: float,
    weight_power: int,
    lambda_power: float,
    order: int,
    radial_range: Tuple[float, float] | None = None,
) -> float:
    r_low, r_high = radial_range or (0.0, spec.r_max)
    angular, decay_factor, jacobian = _angular_layout(spec.dimension, t)
    theta, w_theta = _panel_nodes(angular, order)
    r, w_r = _panel_nodes(np.linspace(r_low, r_high, RADIAL_PANELS + 1), order)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    a = decay_factor(tt) ** 2
    density = np.abs(spec.profile(rr, tt)) ** 2
    if lambda_power:
        density = density * rr ** (2.0 * lambda_power)
    integrand = np.exp(-2.0 * a * t) * a ** weight_power * density * jacobian(rr, tt)
    return float(w_r @ integrand @ w_theta)


def whole_space_norm(
    spec: RadialAngularSpec,
    t: float,
    weight: str = "identity",
    lambda_power: float = 0.0,
    tolerance: float = 1e-8,
    strict: bool = False,
) -> NormEstimate:
    """
    |w(D) Λ^j e^{Rt} ρ₀|_{L²}, w ∈ {identity, R1, R1squared}. In 3D the
    Riesz weights are the horizontal magnitude |ξ_h|/|ξ|.

    The error is the difference between two quadrature orders; when it
    exceeds tolerance·value the estimate is flagged (or raised when strict).
    """
    if t < 0:
        raise DomainError(f"Propagation time must be nonnegative, got {t}")
    if weight not in WEIGHT_POWERS:
        raise ConfigurationError(f"Unknown weight '{weight}', expected one of {sorted(WEIGHT_POWERS)}")
    if lambda_power < 0:
        raise DomainError(f"Power of Λ must be nonnegative, got {lambda_power}")
    spec.validate()
    power = WEIGHT_POWERS[weight]
    low = math.sqrt(max(_integrate(spec, t, power, lambda_power, LOW_ORDER), 0.0))
    high = math.sqrt(max(_integrate(spec, t, power, lambda_power, HIGH_ORDER), 0.0))
    error = abs(high - low)
    converged = error <= tolerance * max(high, np.finfo(float).tiny)
    if not converged:
        logger.warning(
            "Whole-space quadrature did not converge",
            extra={"profile": spec.name, "t": t, "error": error, "value": high},
        )
        if strict:
            raise QuadratureError(error, tolerance * high)
    return NormEstimate(
        t=float(t), value=high, error=error, converged=converged, weight=weight, lambda_power=lambda_power
    )


def gaussian_profile(width: float = 1.0, anisotropy: float = 0.0, dimension: int = 2) -> RadialAngularSpec:
    """ρ̂₀ = e^{-r²/(2 width²)} (1 + anisotropy·cos 2θ), truncated at 10·width."""
    if abs(anisotropy) >= 1:
        raise ConfigurationError("anisotropy must lie in (-1, 1)")

    def profile(r, theta):
        return np.exp(-0.5 * (r / width) ** 2) * (1.0 + anisotropy * np.cos(2.0 * theta))

    return RadialAngularSpec(
        profile=profile, r_max=10.0 * width, name=f"gaussian(w={width:g},a={anisotropy:g})", dimension=dimension
    )


def radial_ratio_exact(t: float, weight: str = "identity") -> float:
    """
    |w e^{Rt} ρ₀| / |ρ₀| for any radial 2D datum, in closed form through the
    exponentially scaled Bessel functions: the angular average of
    cos^{2p}θ e^{-2t cos²θ} is i0e(t), (i0e - i1e)/2 or (3 i0e - 4 i1e + i2e)/8.
    """
    if weight == "identity":
        mean = ive(0, t)
    elif weight == "R1":
        mean = 0.5 * (ive(0, t) - ive(1, t))
    elif weight == "R1squared":
        mean = (3.0 * ive(0, t) - 4.0 * ive(1, t) + ive(2, t)) / 8.0
    else:
        raise ConfigurationError(f"Unknown weight '{weight}'")
    return float(math.sqrt(mean))


@dataclass(frozen=True)
class BoxEmulation:
    """Ratios |w e^{Rt} ρ₀|_{L²} / |ρ₀|_{L²} on a periodic box of side `length`."""

    length: float
    points: int
    weight: str
    times: Tuple[float, ...]
    ratios: Tuple[float, ...]

    def to_dict(self) -> dict:
        return asdict(self)


def box_points(spec: RadialAngularSpec, length: float) -> int:
    """Smallest power of two whose lattice on [-L/2, L/2)² reaches BOX_CUTOFF·r_max."""
    needed = BOX_CUTOFF * spec.r_max * length / math.pi
    points = 8
    while points < needed:
        points *= 2
    if points > MAX_BOX_POINTS:
        raise ConfigurationError(
            f"Box length {length:g} needs {points} points per axis for profile '{spec.name}', "
            f"above the limit {MAX_BOX_POINTS}"
        )
    return points


def box_emulation(
    spec: RadialAngularSpec,
    times: Sequence[float],
    length: float,
    weight: str = "identity",
    lambda_power: float = 0.0,
    points: int | None = None,
) -> BoxEmulation:
    """
    Sample ρ̂₀ on the Fourier lattice of a periodic box and propagate it
    exactly. The lattice sum tends to the whole-space integral as the box
    grows, but modes with k1 = 0 never decay, so on a fixed box the ratio
    levels off once the angular layer 1/√t is thinner than the lattice
    spacing 2π/L.
    """
    if spec.dimension != 2:
        raise ConfigurationError("Box emulation is only available in 2D")
    if weight not in WEIGHT_POWERS:
        raise ConfigurationError(f"Unknown weight '{weight}', expected one of {sorted(WEIGHT_POWERS)}")
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise DomainError("Propagation times must be nonnegative")
    grid = Grid(2, points or box_points(spec, length), float(length))
    k1, k2 = grid.wavevector
    k_sq = grid.wavenumber_squared
    density = np.abs(spec.profile(np.sqrt(k_sq), np.arctan2(k2, k1))) ** 2
    reference = float(np.sum(density))
    a = k1 ** 2 / np.where(k_sq == 0, 1.0, k_sq)
    weighted = density * a ** WEIGHT_POWERS[weight]
    if lambda_power:
        weighted = weighted * k_sq ** lambda_power
    ratios = tuple(math.sqrt(float(np.sum(np.exp(-2.0 * a * t) * weighted)) / reference) for t in times)
    logger.debug("Box emulation evaluated", extra={"length": length, "points": grid.points, "weight": weight})
    return BoxEmulation(
        length=float(length), points=int(grid.points), weight=weight, times=tuple(times), ratios=ratios
    )
