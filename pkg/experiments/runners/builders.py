"""Validated parameter blocks → library objects."""
from __future__ import annotations

from typing import Any, Dict, Optional

from solver.config import InitialCondition, Mode, SimConfig
from spectral.grid import TWO_PI
from stability.profiles import StratifiedProfile, from_samples, linear, linear_plus_sine


def build_profile(data: Optional[Dict[str, Any]]) -> StratifiedProfile:
    data = data or {}
    kind = data.get("kind", "linear")
    K = data.get("K", 1.0)
    if kind == "linear_plus_sine":
        return linear_plus_sine(K, data.get("amplitude", 1.0), data.get("frequency", 1))
    if kind == "samples":
        return from_samples(K, data["samples"])
    return linear(K)


def build_modes(items) -> tuple:
    return tuple(
        Mode(wavevector=tuple(item["wavevector"]), amplitude=item.get("amplitude", 1.0), phase=item.get("phase", 0.0))
        for item in items or ()
    )


def build_sim_config(parameters: Dict[str, Any], dimension: int, seed: int) -> SimConfig:
    initial = parameters.get("initial") or {}
    return SimConfig(
        dimension=dimension,
        points=parameters["N"],
        length=parameters.get("length") or TWO_PI,
        profile=build_profile(parameters.get("profile")),
        initial=InitialCondition(
            kind=initial.get("kind", "random"),
            epsilon=parameters["epsilon"],
            norm_index=initial.get("norm_index", 4.0),
            band=initial.get("band", 8),
            slope=initial.get("slope", 6.0),
            modes=build_modes(initial.get("modes")),
            horizontal_mean=initial.get("horizontal_mean", True),
        ),
        t_end=parameters["T_end"],
        dt=parameters.get("dt"),
        cfl_safety=parameters.get("cfl_safety"),
        diagnostic_stride=parameters["diagnostic_stride"],
        checkpoint_stride=parameters["checkpoint_stride"],
        norms=tuple(parameters["norms"]),
        split_index=parameters["split_index"],
        energy_index=parameters.get("energy_index"),
        nonlinear=parameters["nonlinear"],
        dealias=parameters["dealias"],
        seed=seed,
        fit_window=tuple(parameters["fit_window"]) if parameters.get("fit_window") else None,
    )
