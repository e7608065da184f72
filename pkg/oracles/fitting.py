"""Log-log least-squares power-law fits, used by every decay experiment."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from core_utils.exceptions import FitError

MIN_SAMPLES = 8


@dataclass(frozen=True)
class DecayFit:
    """value ≈ constant·(t+1)^exponent over window; quality is r²."""

    exponent: float
    constant: float
    window: Tuple[float, float]
    quality: float
    samples: int

    def to_dict(self) -> dict:
        data = asdict(self)
        data["window"] = list(self.window)
        return data

    def predict(self, t):
        return self.constant * (np.asarray(t, dtype=np.float64) + 1.0) ** self.exponent


def fit_power_law(
    times: Sequence[float],
    values: Sequence[float],
    window: Tuple[float, float] | None = None,
) -> DecayFit:
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.shape != values.shape:
        raise FitError(f"Series lengths differ: {times.size} times, {values.size} values")
    if window is not None:
        t_min, t_max = window
        if not t_min < t_max:
            raise FitError(f"Empty fit window [{t_min}, {t_max}]")
        inside = np.flatnonzero((times >= t_min) & (times <= t_max))
    else:
        inside = np.arange(times.size)
    if inside.size < MIN_SAMPLES:
        raise FitError(f"Need at least {MIN_SAMPLES} samples in the fit window, got {inside.size}")
    bad = inside[~(values[inside] > 0) | ~np.isfinite(values[inside])]
    if bad.size:
        raise FitError("Series values must be positive and finite", indices=bad.tolist())
    result = linregress(np.log(times[inside] + 1.0), np.log(values[inside]))
    return DecayFit(
        exponent=float(result.slope),
        constant=float(np.exp(result.intercept)),
        window=(float(times[inside].min()), float(times[inside].max())),
        quality=float(result.rvalue ** 2),
        samples=int(inside.size),
    )
