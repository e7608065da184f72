"""Admissibility of a stratified profile: conditions (A)-(D) of the stable class."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np

from .profiles import MAX_DERIVATIVE_ORDER, StratifiedProfile

CHECK_POINTS = 4096
PERIODICITY_TOLERANCE = 1e-10
PERIODICITY_ORDERS = 4


def profile_grid(points: int = CHECK_POINTS) -> np.ndarray:
    return -math.pi + (2.0 * math.pi / points) * np.arange(points)


@dataclass
class ConditionReport:
    periodic: bool
    monotone: bool
    curvature: bool
    smooth: bool
    c: float
    third_derivative_positive_part: float
    curvature_threshold: float
    periodicity_defect: float
    derivative_norms: List[float] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.periodic and self.monotone and self.curvature and self.smooth

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["admissible"] = self.admissible
        return data


def profile_conditions(profile: StratifiedProfile, points: int = CHECK_POINTS) -> ConditionReport:
    """
    (A) ω periodic: derivatives of ω up to order 3 match at ±π.
    (B) c = min Ω′ > 0 on the check grid.
    (C) |Ω‴₊|_∞ < c π²/2.
    (D) sup-norms of ω^{(j)}, j ≤ 21, finite on the check grid.
    """
    y = profile_grid(points)
    ends = np.array([-math.pi, math.pi])
    defect = 0.0
    for order in range(PERIODICITY_ORDERS):
        left, right = profile.omega(ends, order)
        defect = max(defect, abs(right - left) / max(1.0, abs(left)))
    c = float(np.min(profile.slope(y)))
    third = float(np.max(np.maximum(profile.derivative(y, 3), 0.0)))
    threshold = c * math.pi ** 2 / 2.0
    norms = [float(np.max(np.abs(profile.omega(y, j)))) for j in range(MAX_DERIVATIVE_ORDER + 1)]
    return ConditionReport(
        periodic=bool(defect <= PERIODICITY_TOLERANCE),
        monotone=c > 0,
        curvature=third < threshold,
        smooth=all(math.isfinite(n) for n in norms),
        c=c,
        third_derivative_positive_part=third,
        curvature_threshold=threshold,
        periodicity_defect=defect,
        derivative_norms=norms,
    )
