"""
Time loop: CFL-controlled IFRK4 steps, diagnostics at a fixed step stride,
field checkpoints, bit-exact resume and the run summary.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

from django.conf import settings

from core_utils.exceptions import BlowUpError, CFLViolation, ConfigurationError, FitError, NumericError
from oracles.fitting import fit_power_law
from spectral.checkpoint import read_checkpoint, write_checkpoint

from .config import SimConfig
from .diagnostics import DiagnosticsRecord, record
from .dynamics import PerturbationDynamics
from .integrator import IntegratingFactorRK4
from .state import SimState

logger = logging.getLogger(__name__)

RecordCallback = Callable[[DiagnosticsRecord], None]

TERMINATIONS = {BlowUpError: "blow-up", CFLViolation: "cfl-violation"}


@dataclass
class RunSummary:
    config: dict
    termination: str
    steps: int
    t_final: float
    final_norms: dict
    mean_drift: float
    bar_fit: Optional[dict] = None
    bar_fit_note: str = ""
    error: Optional[dict] = None
    checkpoints: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    records: List[DiagnosticsRecord]
    state: SimState
    summary: RunSummary


class Simulation:
    def __init__(
        self,
        config: SimConfig,
        on_record: RecordCallback | None = None,
        checkpoint_dir: Path | None = None,
        cfl_limit: float | None = None,
    ):
        self.config = config
        self.grid = config.grid
        self.dynamics = PerturbationDynamics(self.grid, config.profile, config.nonlinear, config.dealias)
        self.integrator = IntegratingFactorRK4(self.dynamics)
        self.on_record = on_record
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.cfl_limit = settings.IPM_CFL_LIMIT if cfl_limit is None else cfl_limit

    def initial_state(self) -> SimState:
        rho = self.config.initial.build(self.grid, self.config.seed)
        return SimState(t=0.0, rho=rho, step=0)

    def resume(self, path: Path) -> SimState:
        rho, metadata = read_checkpoint(path)
        if rho.grid != self.grid:
            raise ConfigurationError(f"Checkpoint grid {rho.grid.describe()} does not match {self.grid.describe()}")
        return SimState(t=float(metadata["t"]), rho=rho, step=int(metadata["step"]))

    def courant(self, state: SimState, dt: float) -> float:
        return state.max_speed * abs(dt) / self.grid.spacing

    def stable_dt(self, state: SimState) -> float:
        return self.config.safety * self.grid.spacing / max(1.0, state.max_speed)

    def next_dt(self, state: SimState) -> float:
        dt = self.config.dt if self.config.dt is not None else self.stable_dt(state)
        remaining = self.config.t_end - state.t
        return min(dt, remaining)

    def step(self, state: SimState, dt: float | None = None) -> SimState:
        """One IFRK4 step; rejected with CFLViolation when max|u|·|dt|/Δx exceeds the limit."""
        dt = self.next_dt(state) if dt is None else dt
        courant = self.courant(state, dt)
        if courant > self.cfl_limit:
            raise CFLViolation(courant, self.cfl_limit, self.stable_dt(state))
        rho = self.integrator.step(state.rho, state.t, dt)
        if not rho.is_finite():
            raise BlowUpError(state.t + dt, rho.max_coefficient)
        return SimState(t=state.t + dt, rho=rho, step=state.step + 1)

    def _checkpoint(self, state: SimState) -> Optional[str]:
        if self.checkpoint_dir is None:
            return None
        path = self.checkpoint_dir / f"checkpoint_{state.step:08d}.ipmf"
        write_checkpoint(path, state.rho, {"t": state.t, "step": state.step, "config": self.config.to_dict()})
        logger.debug("Checkpoint written", extra={"path": str(path), "step": state.step})
        return path.name

    def _emit(self, records: List[DiagnosticsRecord], state: SimState, dt: float) -> None:
        entry = record(state, self.config, self.dynamics, dt, self.integrator)
        records.append(entry)
        if self.on_record is not None:
            self.on_record(entry)

    def run(self, state: SimState | None = None) -> RunResult:
        """
        Advance to t_end. Numeric errors (blow-up, CFL violation, step
        instability) escape with `records` and `summary` attached so the
        partial series survives.
        """
        config = self.config
        state = self.initial_state() if state is None else state
        initial_mean = state.rho.mean
        records: List[DiagnosticsRecord] = []
        checkpoints: List[str] = []
        logger.info(
            "Run started",
            extra={"t": state.t, "step": state.step, "grid": self.grid.describe(), "profile": config.profile.name},
        )
        dt = self.next_dt(state) if state.t < config.t_end else 0.0
        try:
            if state.step % config.diagnostic_stride == 0:
                self._emit(records, state, dt)
            while config.t_end - state.t > 1e-12 * max(1.0, config.t_end):
                dt = self.next_dt(state)
                state = self.step(state, dt)
                if config.t_end - state.t <= 1e-12 * max(1.0, config.t_end):
                    state = SimState(t=config.t_end, rho=state.rho, step=state.step)
                if config.checkpoint_stride and state.step % config.checkpoint_stride == 0:
                    name = self._checkpoint(state)
                    if name:
                        checkpoints.append(name)
                if state.step % config.diagnostic_stride == 0:
                    self._emit(records, state, dt)
        except NumericError as error:
            termination = TERMINATIONS.get(type(error), "numeric-error")
            logger.error(
                "Run stopped by a numeric error",
                extra={"t": state.t, "step": state.step, "termination": termination},
                exc_info=True,
            )
            error.records = records
            error.summary = self.summarize(records, state, initial_mean, termination, checkpoints, error.to_dict())
            raise
        if not records or records[-1].step != state.step:
            self._emit(records, state, dt)
        if config.checkpoint_stride and (not checkpoints or not checkpoints[-1].endswith(f"{state.step:08d}.ipmf")):
            name = self._checkpoint(state)
            if name:
                checkpoints.append(name)
        summary = self.summarize(records, state, initial_mean, "t_end", checkpoints)
        logger.info("Run finished", extra={"t": state.t, "steps": state.step})
        return RunResult(records=records, state=state, summary=summary)

    def summarize(
        self,
        records: List[DiagnosticsRecord],
        state: SimState,
        initial_mean: float,
        termination: str,
        checkpoints: List[str],
        error: dict | None = None,
    ) -> RunSummary:
        final = records[-1] if records else None
        summary = RunSummary(
            config=self.config.to_dict(),
            termination=termination,
            steps=state.step,
            t_final=state.t,
            final_norms=dict(final.norms) if final else {},
            mean_drift=abs(state.rho.mean - initial_mean),
            error=error,
            checkpoints=checkpoints,
        )
        window = self.config.fit_window
        if window:
            times = [r.t for r in records]
            values = [r.bar_norm for r in records]
            try:
                summary.bar_fit = fit_power_law(times, values, window).to_dict()
            except FitError as exc:
                summary.bar_fit_note = str(exc)
            else:
                # discrete spectrum: algebraic rates only hold before t ≈ N²
                summary.bar_fit_note = f"pre-cutoff window, N = {self.config.points}"
        return summary


def run(config: SimConfig, **kwargs) -> RunResult:
    return Simulation(config, **kwargs).run()


def step_3d(simulation: Simulation, state: SimState, dt: float | None = None) -> SimState:
    if simulation.grid.dimension != 3:
        raise ConfigurationError("step_3d needs a three-dimensional configuration")
    return simulation.step(state, dt)


def run_3d(config: SimConfig, **kwargs) -> RunResult:
    if config.dimension != 3:
        raise ConfigurationError("run_3d needs a three-dimensional configuration")
    return run(config, **kwargs)
