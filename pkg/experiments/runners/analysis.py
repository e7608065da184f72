"""Lemma oracles, quadratic forms and standalone power-law fits."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from core_utils.exceptions import ConfigurationError
from core_utils.formatting import read_csv, write_csv, write_json
from oracles.fitting import fit_power_law
from oracles.lemmas import verify_all
from spectral.fields import random_field
from spectral.grid import Grid
from stability.conditions import profile_conditions
from stability.forms import quadratic_form

from .base import BaseRunner, Check, FitEntry, RunContext, RunnerResult
from .builders import build_profile

logger = logging.getLogger(__name__)


class VerifyLemmasRunner(BaseRunner):
    name = "verify-lemmas"

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        verdicts = verify_all(
            profile=context.tolerance_profile,
            t_max=parameters["t_max"],
            deltas=tuple(parameters["deltas"]),
            etas=tuple(parameters["etas"]),
        )
        write_json(context.out_dir / "lemmas.json", [verdict.to_dict() for verdict in verdicts])
        rows = [
            {
                "lemma": verdict.lemma,
                "parameters": json.dumps(verdict.parameters, sort_keys=True),
                "passed": verdict.passed,
                "note": verdict.note,
            }
            for verdict in verdicts
        ]
        write_csv(context.out_dir / "lemmas.csv", ["lemma", "parameters", "passed", "note"], rows)

        result = RunnerResult(kind=self.name, files=["lemmas.json", "lemmas.csv"])
        for verdict in verdicts:
            label = ",".join(f"{key}={value:g}" for key, value in sorted(verdict.parameters.items()))
            result.checks.append(Check(f"{verdict.lemma}[{label}]", float(verdict.passed), 1.0, relation=">="))
            if verdict.lemma == "angular_integral":
                k = verdict.parameters["k"]
                result.fits.append(
                    FitEntry(
                        f"angular_integral_k{k:g}",
                        verdict.measured["exponent"],
                        [1e2, 1e6],
                        1.0,
                        -0.5 * (k + 1),
                        context.tolerances["exponent_identity"],
                    )
                )
        result.summary = {
            "grid": parameters["grid"],
            "t_max": parameters["t_max"],
            "lemmas": len(verdicts),
            "failed": [check.name for check in result.checks if not check.passed],
            "saturation_tolerance": context.tolerances["saturation"],
            "convolution_saturation": [
                {
                    **verdict.parameters,
                    "saturation_change": verdict.measured["saturation_change"],
                    "contraction": verdict.measured["contraction"],
                    "saturated": verdict.measured["saturation_change"] <= context.tolerances["saturation"],
                }
                for verdict in verdicts
                if verdict.lemma == "convolution_bound"
            ],
        }
        return self.write_summary(context.out_dir, result)


class StabilityFormsRunner(BaseRunner):
    name = "stability-forms"

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        profile = build_profile(parameters.get("profile"))
        grid = Grid(parameters["dimension"], parameters["N"])
        rng = np.random.default_rng(spec.seed)

        rows = []
        for index in range(parameters["samples"]):
            g = random_field(grid, rng, slope=parameters["slope"], band=parameters["band"])
            report = quadratic_form(profile, g)
            rows.append(
                {
                    "sample": index,
                    "Q": report.Q,
                    "bound": report.bound,
                    "lower_bound": report.lower_bound,
                    "margin": report.margin,
                    "relative_margin": report.margin / max(abs(report.Q), np.finfo(float).tiny),
                    "hypotheses_met": report.hypotheses_met,
                }
            )
        columns = ["sample", "Q", "bound", "lower_bound", "margin", "relative_margin", "hypotheses_met"]
        write_csv(context.out_dir / "forms.csv", columns, rows)
        conditions = profile_conditions(profile)
        logger.info(
            "Quadratic forms evaluated",
            extra={"kind": self.name, "profile": profile.name, "samples": len(rows), "admissible": conditions.admissible},
        )
        result = RunnerResult(kind=self.name, files=["forms.csv"])
        result.checks.append(
            Check(
                "min_relative_margin",
                min(row["relative_margin"] for row in rows),
                -context.tolerances["form_margin"],
                relation=">=",
            )
        )
        result.summary = {
            "profile": profile.to_dict(),
            "grid": grid.describe(),
            "conditions": conditions.to_dict(),
            "admissible": conditions.admissible,
            "hypotheses_met": all(row["hypotheses_met"] for row in rows),
        }
        return self.write_summary(context.out_dir, result)


class FitRunner(BaseRunner):
    name = "fit"

    def run(self, spec, context: RunContext) -> RunnerResult:
        parameters = spec.parameters
        source = Path(parameters["source"])
        if not source.is_file():
            raise ConfigurationError(f"Fit source {source} does not exist")
        table = read_csv(source)
        time_column = parameters["time_column"]
        missing = [c for c in [time_column, *parameters["columns"]] if table and c not in table[0]]
        if not table or missing:
            raise ConfigurationError(f"Fit source {source} lacks columns: {', '.join(missing) or 'all rows'}")
        times = [float(row[time_column]) for row in table]
        window = tuple(parameters["window"]) if parameters.get("window") else None
        targets = parameters["targets"]

        result = RunnerResult(kind=self.name, files=["fits.csv"])
        rows = []
        for column in parameters["columns"]:
            fit = fit_power_law(times, [float(row[column]) for row in table], window)
            target = targets.get(column)
            tolerance = context.tolerances["exponent"] if target is not None else None
            entry = FitEntry(column, fit.exponent, list(fit.window), fit.quality, target, tolerance)
            result.fits.append(entry)
            if target is not None:
                result.checks.append(Check(f"exponent_{column}", abs(entry.deviation), tolerance))
            rows.append({"column": column, **fit.to_dict(), "window": f"{fit.window[0]!r}:{fit.window[1]!r}"})
        write_csv(
            context.out_dir / "fits.csv",
            ["column", "exponent", "constant", "quality", "samples", "window"],
            rows,
        )
        result.summary = {"source": str(source), "time_column": time_column, "window": list(window) if window else None}
        return self.write_summary(context.out_dir, result)
