"""
The linear-stability quadratic form Q[g] = ∫ Ω′(y)·(𝒫g)·g.

𝒫 is the positive operator with symbol |k_h|²/|k|² (k1²/|k|² in 2D). Two
lower bounds are available:
  gradient:  Q ≥ K |R_h g|²              when Ω′ ≥ K and Ω‴ ≤ 0,
  curvature: Q ≥ (K - |Ω‴₊|_∞/(2π²)) |𝒫g|²  when Ω′ ≥ K,
with K = min Ω′ over the grid and |R_h g|² = (𝒫g, g). The hypotheses are
only met when the coefficient of the bound in use is positive.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from spectral.fields import SpectralField, transform_inverse
from spectral.multipliers import horizontal_projection

from .profiles import StratifiedProfile

CURVATURE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FormReport:
    Q: float
    bound: str
    lower_bound: float
    margin: float
    gradient_bound: float
    curvature_bound: float
    curvature_coefficient: float
    K: float
    third_derivative_positive_part: float
    hypotheses_met: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _vertical_samples(profile: StratifiedProfile, field: SpectralField, order: int) -> np.ndarray:
    grid = field.grid
    shape = [1] * grid.dimension
    shape[grid.vertical_axis] = grid.points
    return profile.derivative(grid.axis_coordinates, order).reshape(shape)


def quadratic_form(profile: StratifiedProfile, g: SpectralField) -> FormReport:
    grid = g.grid
    projected = g.with_coefficients(horizontal_projection().evaluate(grid) * g.coefficients)
    slope = _vertical_samples(profile, g, 1)
    Q = float(grid.cell_volume * np.sum(slope * transform_inverse(projected) * transform_inverse(g)))

    riesz_sq = float(grid.volume * np.real(np.vdot(g.coefficients, projected.coefficients)))
    projected_sq = float(grid.volume * np.sum(np.abs(projected.coefficients) ** 2))
    K = float(np.min(slope))
    third = float(np.max(np.maximum(_vertical_samples(profile, g, 3), 0.0)))

    gradient_bound = K * riesz_sq
    coefficient = K - third / (2.0 * math.pi ** 2)
    curvature_bound = coefficient * projected_sq
    if third <= CURVATURE_TOLERANCE:
        bound, lower = "gradient", gradient_bound
    else:
        bound, lower = "curvature", curvature_bound
    return FormReport(
        Q=Q,
        bound=bound,
        lower_bound=lower,
        margin=Q - lower,
        gradient_bound=gradient_bound,
        curvature_bound=curvature_bound,
        curvature_coefficient=coefficient,
        K=K,
        third_derivative_positive_part=third,
        # the curvature bound is vacuous once its coefficient is non-positive
        hypotheses_met=K > 0 and (bound == "gradient" or coefficient > 0),
    )
