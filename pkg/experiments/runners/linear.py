"""
Linear experiments: the torus propagator, whole-space quadrature rates,
the perturbed linear flow and the sharpness families.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from core_utils.exceptions import ConfigurationError, FitError
from core_utils.formatting import write_csv
from oracles.fitting import fit_power_law
from semigroup.perturbed import PerturbationCoefficient, PerturbedEvolution
from semigroup.sharpness import sharpness_concentrated, sharpness_radial
from semigroup.torus import VELOCITY_LOSS_BOUND, torus_propagate, uniform_bound_constants, velocity_decay_series
from semigroup.whole_space import WEIGHT_POWERS, box_emulation, gaussian_profile, whole_space_norm
from spectral.fields import random_field, sample
from spectral.grid import Grid
from spectral.operators import bar_tilde_split, l2_norm, sobolev_norm

from .base import BaseRunner, Check, FitEntry, RunContext, RunnerResult

logger = logging.getLogger(__name__)

DEFAULT_MODES = {
    2: [((1, 0), 1.0), ((1, 1), 0.5), ((2, 1), 0.25), ((1, 3), 0.2), ((3, 2), 0.1)],
    3: [((1, 0, 0), 1.0), ((1, 1, 1), 0.5), ((0, 2, 1), 0.25), ((1, 0, 3), 0.2), ((2, 1, 1), 0.1)],
}

# per-sample L² growth allowed along the perturbed flow
MONOTONE_TOLERANCE = 1e-12


def _mode_sum(grid: Grid, modes, t: float = 0.0, rate: float = 0.0):
    """Σ a e^{-rate |n_h|²/|n|² t} cos(n·x + φ) with each factor evaluated per mode."""

    def values(*x):
        total = np.zeros(grid.shape)
        for wavevector, amplitude, phase in modes:
            n = np.asarray(wavevector, dtype=np.float64)
            norm_sq = float(n @ n)
            damping = math.exp(-rate * float(n[:-1] @ n[:-1]) / norm_sq * t) if norm_sq else 1.0
            total = total + amplitude * damping * np.cos(sum(ni * xi for ni, xi in zip(n, x)) + phase)
        return total

    return sample(grid, values)


def _uniform_bound_ceiling(power: int, times) -> float:
    """sup_t (t+1)^{k/2} max_{a ≤ 1} a^k e^{-a² t}, over a fine grid joined with the sampled times."""
    grid = np.unique(np.concatenate([[0.0], np.geomspace(1e-4, 1e6, 2001), np.asarray(times, dtype=np.float64)]))
    with np.errstate(divide="ignore"):
        a_sq = np.minimum(1.0, np.where(grid > 0, 0.5 * power / grid, 1.0))
    if power == 0:
        return 1.0
    return float(np.max((grid + 1.0) ** (0.5 * power) * a_sq ** (0.5 * power) * np.exp(-a_sq * grid)))


class LinearTorusRunner(BaseRunner):
    name = "linear-torus"

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        grid = Grid(parameters["dimension"], parameters["N"])
        if parameters.get("modes"):
            modes = [(tuple(m["wavevector"]), m["amplitude"], m["phase"]) for m in parameters["modes"]]
        else:
            modes = [(n, a, 0.0) for n, a in DEFAULT_MODES[grid.dimension]]
        for wavevector, _, _ in modes:
            if len(wavevector) != grid.dimension:
                raise ConfigurationError(f"Mode {wavevector} does not match dimension {grid.dimension}")
        rate = parameters["rate"]
        rho0 = _mode_sum(grid, modes)
        reference = l2_norm(rho0)

        rows = []
        for t in parameters["times"]:
            evolved = torus_propagate(rho0, t, rate)
            expected = _mode_sum(grid, modes, t, rate)
            rows.append(
                {
                    "t": t,
                    "relative_error": l2_norm(evolved - expected) / reference,
                    "l2_norm": l2_norm(evolved),
                    "bar_l2": l2_norm(bar_tilde_split(evolved)[0]),
                }
            )
        write_csv(context.out_dir / "propagator.csv", ["t", "relative_error", "l2_norm", "bar_l2"], rows)

        velocity_rows = velocity_decay_series(rho0, parameters["times"], parameters["velocity_index"])
        write_csv(
            context.out_dir / "velocity.csv",
            ["t", "velocity_norm", "bar_norm", "datum_norm", "loss_ratio", "scaled_loss_ratio"],
            velocity_rows,
        )

        bounds = uniform_bound_constants(rho0, parameters["bound_times"])
        result = RunnerResult(kind=self.name, files=["propagator.csv", "velocity.csv"])
        result.summary = {
            "grid": grid.describe(),
            "rate": rate,
            "modes": [{"wavevector": list(n), "amplitude": a, "phase": p} for n, a, p in modes],
            "uniform_bounds": bounds.to_dict(),
        }
        result.checks.append(
            Check("propagator_error", max(row["relative_error"] for row in rows), context.tolerances["propagator"])
        )
        if rate == 1.0:
            for power, constant in bounds.constants.items():
                ceiling = _uniform_bound_ceiling(power, bounds.times)
                result.checks.append(Check(f"uniform_bound_k{power}", constant, ceiling * (1.0 + 1e-12)))
            result.checks.append(
                Check(
                    "velocity_derivative_loss",
                    max(row["scaled_loss_ratio"] for row in velocity_rows),
                    VELOCITY_LOSS_BOUND,
                )
            )
        return self.write_summary(context.out_dir, result)


class WholeSpaceRunner(BaseRunner):
    name = "linear-whole-space"

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        dimension = parameters["dimension"]
        profile = gaussian_profile(parameters["width"], parameters["anisotropy"], dimension)
        times = np.geomspace(parameters["t_min"], parameters["t_max"], parameters["samples"])
        weights = list(parameters["weights"])

        columns = {weight: [] for weight in weights}
        unconverged = 0
        for t in times:
            for weight in weights:
                estimate = whole_space_norm(profile, float(t), weight, parameters["lambda_power"])
                unconverged += not estimate.converged
                columns[weight].append(estimate.value)
        rows = [{"t": t, **{weight: columns[weight][i] for weight in weights}} for i, t in enumerate(times)]
        write_csv(context.out_dir / "norms.csv", ["t", *weights], rows)

        result = RunnerResult(kind=self.name, files=["norms.csv"])
        for weight in weights:
            fit = fit_power_law(times, columns[weight])
            target = tolerance = None
            if dimension == 2:
                target = -(1 + 2 * WEIGHT_POWERS[weight]) / 4.0
                tolerance = context.tolerances["exponent_identity" if weight == "identity" else "exponent"]
            entry = FitEntry(weight, fit.exponent, list(fit.window), fit.quality, target, tolerance)
            result.fits.append(entry)
            if target is not None:
                result.checks.append(Check(f"exponent_{weight}", abs(entry.deviation), tolerance))
        result.summary = {
            "profile": profile.name,
            "dimension": dimension,
            "lambda_power": parameters["lambda_power"],
            "unconverged_estimates": unconverged,
        }
        if parameters["box_lengths"]:
            result.files.append("box_sizes.csv")
            result.summary["box_sweep"], result.summary["box_trend"] = self.box_sweep(
                profile, times, parameters, {fit.quantity: fit.exponent for fit in result.fits}, context
            )
        logger.info("Whole-space rates fitted", extra={"kind": self.name, "unconverged": unconverged})
        return self.write_summary(context.out_dir, result)

    def box_sweep(self, profile, times, parameters, quadrature_exponents, context: RunContext):
        """
        Emulate the whole space on periodic boxes of growing side and fit the
        same exponents there. The trend is reported, never checked.
        """
        lengths = sorted(parameters["box_lengths"])
        rows = [{"t": float(t)} for t in times]
        entries = []
        for weight in parameters["weights"]:
            for length in lengths:
                emulation = box_emulation(
                    profile, times, length, weight, parameters["lambda_power"], parameters["box_points"]
                )
                column = f"{weight}_L{length:g}"
                for row, ratio in zip(rows, emulation.ratios):
                    row[column] = ratio
                fit = fit_power_law(times, emulation.ratios)
                entries.append(
                    {
                        "weight": weight,
                        "length": length,
                        "points": emulation.points,
                        "exponent": fit.exponent,
                        "deviation": fit.exponent - quadrature_exponents[weight],
                    }
                )
        columns = ["t", *[f"{weight}_L{length:g}" for weight in parameters["weights"] for length in lengths]]
        write_csv(context.out_dir / "box_sizes.csv", columns, rows)

        trend = {}
        for weight in parameters["weights"]:
            deviations = [abs(entry["deviation"]) for entry in entries if entry["weight"] == weight]
            shrinking = all(later <= earlier for earlier, later in zip(deviations, deviations[1:]))
            trend[weight] = "converging" if shrinking else "not converging"
        logger.info("Box-size sweep finished", extra={"kind": self.name, "lengths": lengths, "trend": trend})
        return entries, trend


class PerturbedLinearRunner(BaseRunner):
    name = "perturbed-linear"
    TARGET_EXPONENT = -2.5

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        grid = Grid(2, parameters["N"])
        amplitude, frequency = parameters["amplitude"], parameters["frequency"]
        coefficient = PerturbationCoefficient(
            function=lambda y, t: amplitude * np.sin(frequency * y),
            name=f"{amplitude:g}sin({frequency}y)",
        )
        index = parameters["sobolev_index"]
        bar, _ = bar_tilde_split(
            random_field(grid, np.random.default_rng(spec.seed), slope=parameters["slope"], band=parameters["band"])
        )
        norm = sobolev_norm(bar, index)
        rho0 = bar * (parameters["epsilon"] / norm) if norm else bar

        evolution = PerturbedEvolution(grid, coefficient, dt=parameters["dt"], delta=parameters["delta"])
        t_end = parameters["T_end"]
        sample_times = np.geomspace(1.0, t_end, parameters["samples"])
        rows = []
        for t, rho in evolution.trajectory(rho0, t_end, sample_times):
            _, tilde = bar_tilde_split(rho)
            rows.append(
                {"t": t, "l2_norm": l2_norm(rho), f"H{index:g}_norm": sobolev_norm(rho, index), "horizontal_mean": l2_norm(tilde)}
            )
        write_csv(
            context.out_dir / "trajectory.csv", ["t", "l2_norm", f"H{index:g}_norm", "horizontal_mean"], rows
        )

        l2 = np.array([row["l2_norm"] for row in rows])
        label = f"H{index:g}_norm"
        decaying = np.array([row[label] for row in rows])
        growth = float(np.max(np.diff(l2)) / l2[0]) if l2[0] > 0 else 0.0
        result = RunnerResult(kind=self.name, files=["trajectory.csv"])
        result.checks = [
            Check("horizontal_mean", max(row["horizontal_mean"] for row in rows), context.tolerances["mean_conservation"]),
            Check("l2_growth", growth, MONOTONE_TOLERANCE),
        ]
        result.summary = {
            "grid": grid.describe(),
            "coefficient": coefficient.name,
            "certificate": evolution.certificate,
            "delta": evolution.delta,
            "initial_norm_index": index,
            "note": f"band-limited datum (|n| <= {parameters['band']}); algebraic decay only holds before t ~ N^2",
        }
        window = tuple(parameters["fit_window"] or (10.0, t_end))
        try:
            fit = fit_power_law([row["t"] for row in rows], decaying, window)
        except FitError as exc:
            result.summary["fit_note"] = str(exc)
        else:
            low, high = parameters["exponent_range"]
            result.fits.append(
                FitEntry(label, fit.exponent, list(fit.window), fit.quality, self.TARGET_EXPONENT, high - low)
            )
            if parameters["check_exponent"]:
                result.checks += [
                    Check("exponent_upper", fit.exponent, high),
                    Check("exponent_lower", fit.exponent, low, relation=">="),
                ]
        return self.write_summary(context.out_dir, result)


class SharpnessRunner(BaseRunner):
    name = "sharpness"

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        width = parameters["radial_width"]
        times = np.geomspace(parameters["t_min"], parameters["t_max"], parameters["samples"])
        rows = []
        for t in times:
            concentrated = sharpness_concentrated(float(t), parameters["nodes"])
            radial = sharpness_radial(lambda r: np.exp(-0.5 * (r / width) ** 2), float(t), 10.0 * width)
            rows.append(
                {
                    "t": float(t),
                    "concentrated": concentrated.value,
                    "support_floor": concentrated.floor,
                    "radial_ratio": radial.value,
                    "radial_scaled": radial.scaled,
                }
            )
        write_csv(
            context.out_dir / "sharpness.csv",
            ["t", "concentrated", "support_floor", "radial_ratio", "radial_scaled"],
            rows,
        )
        result = RunnerResult(kind=self.name, files=["sharpness.csv"])
        result.checks = [
            Check("concentrated_min", min(row["concentrated"] for row in rows), parameters["floor"], relation=">="),
            Check(
                "support_floor_margin",
                min(row["concentrated"] - row["support_floor"] for row in rows),
                0.0,
                relation=">=",
            ),
        ]
        result.summary = {
            "floor": parameters["floor"],
            "radial_limit": (2.0 * math.pi) ** -0.25,
            "radial_scaled_last": rows[-1]["radial_scaled"],
        }
        try:
            fit = fit_power_law(times, [row["radial_ratio"] for row in rows], (1e2, parameters["t_max"]))
        except FitError as exc:
            result.summary["fit_note"] = str(exc)
        else:
            result.fits.append(
                FitEntry("radial_identity", fit.exponent, list(fit.window), fit.quality, -0.25,
                         context.tolerances["exponent_identity"])
            )
        return self.write_summary(context.out_dir, result)
