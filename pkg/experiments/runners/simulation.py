"""Nonlinear perturbation runs around a stratified state (simulate2d, simulate3d)."""
from __future__ import annotations

import logging
import math

from django.conf import settings

from core_utils.exceptions import NumericError
from core_utils.formatting import CSVSeriesWriter
from solver.diagnostics import csv_columns
from solver.simulation import Simulation
from spectral.operators import divergence_defect
from stability.stationary import energy_identity_check

from .base import BaseRunner, Check, FitEntry, RunContext, RunnerResult
from .builders import build_sim_config

logger = logging.getLogger(__name__)


class SimulationRunner(BaseRunner):
    """Streams diagnostics to diagnostics.csv and checks the declared stability bounds."""

    DIAGNOSTICS_NAME = "diagnostics.csv"
    CHECKPOINT_DIR = "checkpoints"

    def __init__(self, dimension: int):
        self.dimension = dimension
        self.name = f"simulate{dimension}d"

    def run(self, spec, context: RunContext) -> RunnerResult:
        out_dir, resume = context.out_dir, context.resume
        parameters = spec.parameters
        config = build_sim_config(parameters, self.dimension, spec.seed)
        checkpoint_dir = None
        if config.checkpoint_stride and settings.IPM_WRITE_CHECKPOINTS:
            checkpoint_dir = out_dir / self.CHECKPOINT_DIR
            checkpoint_dir.mkdir(parents=True, exist_ok=True)

        result = RunnerResult(kind=self.name, files=[self.DIAGNOSTICS_NAME])
        with CSVSeriesWriter(out_dir / self.DIAGNOSTICS_NAME, csv_columns(config)) as writer:
            simulation = Simulation(config, on_record=lambda entry: writer.write(entry.to_row()), checkpoint_dir=checkpoint_dir)
            state = simulation.resume(resume) if resume else None
            try:
                outcome = simulation.run(state)
            except NumericError as error:
                partial = getattr(error, "summary", None)
                if partial is not None:
                    # partial series is already on disk; keep the summary next to it
                    result.summary = partial.to_dict()
                    self.write_summary(out_dir, result)
                    result.files += self._checkpoint_files(partial.checkpoints)
                raise

        summary = outcome.summary
        result.summary = summary.to_dict()
        result.summary["resumed_from"] = str(resume) if resume else None
        result.files += self._checkpoint_files(summary.checkpoints if checkpoint_dir else [])
        result.checks = self.checks(parameters, config, outcome, context.tolerances)
        if summary.bar_fit:
            result.fits.append(
                FitEntry(
                    quantity=f"bar_H{config.split_index:g}",
                    exponent=summary.bar_fit["exponent"],
                    window=summary.bar_fit["window"],
                    quality=summary.bar_fit["quality"],
                )
            )
        logger.info(
            "Simulation finished",
            extra={"kind": self.name, "steps": summary.steps, "status": result.status},
        )
        return self.write_summary(out_dir, result)

    def _checkpoint_files(self, names):
        return [f"{self.CHECKPOINT_DIR}/{name}" for name in names]

    def checks(self, parameters, config, outcome, tolerances):
        records = outcome.records
        first, last = records[0], records[-1]
        checks = [Check("mean_drift", outcome.summary.mean_drift, tolerances["mean_conservation"])]

        lhs, rhs = energy_identity_check(outcome.state.rho)
        scale = max(abs(rhs), math.ulp(1.0))
        checks.append(Check("energy_identity", abs(lhs - rhs) / scale, tolerances["identity"]))
        velocity = outcome.state.velocity
        size = max(max(u.max_coefficient for u in velocity), math.ulp(1.0))
        checks.append(Check("divergence_defect", divergence_defect(velocity) / size, tolerances["identity"]))

        expect = parameters["expect"]
        epsilon = parameters["epsilon"]
        if expect == "stable":
            label = f"{config.initial.norm_index:g}"
            worst = max(entry.norms[label] for entry in records)
            checks.append(Check(f"max_rho_H{label}", worst, parameters["growth_bound"] * epsilon))
            if first.velocity_l2 > 0:
                checks.append(
                    Check("velocity_ratio", last.velocity_l2 / first.velocity_l2, parameters["velocity_decay"])
                )
            if outcome.summary.bar_fit:
                checks.append(
                    Check("bar_exponent", outcome.summary.bar_fit["exponent"], parameters["bar_exponent_max"])
                )
        elif expect == "unstable" and first.velocity_l2 > 0:
            growth = max(entry.velocity_l2 for entry in records) / first.velocity_l2
            checks.append(Check("velocity_growth", growth, parameters["growth_factor"], relation=">="))
        return checks
