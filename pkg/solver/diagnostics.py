"""
Per-record diagnostics and the instantaneous energy-estimate ledger.

The ledger compares the H^s energy rate with the right-hand terms of

    ∂ₜ|ρ|²_{H^s} ≤ C(|∇u_v|_∞ |ρ|²_{H^s} + |u|²_{H^s} |ρ|_{H^s}) - ½|u|²_{H^s}

and reports the smallest C for which the inequality holds at that instant.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from core_utils.exceptions import DomainError
from spectral.operators import (
    bar_tilde_split,
    grad_linf,
    horizontal_derivative_l2,
    l2_norm,
    sobolev_norm,
    vector_sobolev_norm,
)

from .config import SimConfig
from .dynamics import PerturbationDynamics
from .integrator import IntegratingFactorRK4
from .state import SimState

MIN_LEDGER_INDEX = 4.0


def _index_label(s: float) -> str:
    return f"{s:g}"


@dataclass(frozen=True)
class EnergyLedger:
    s: float
    rate: float
    rate_step: Optional[float]
    gradient_term: float
    coupling_term: float
    dissipation_term: float
    linear_dissipation: float
    C_min: float

    def to_dict(self) -> dict:
        return asdict(self)


def _sobolev_inner(a: np.ndarray, b: np.ndarray, weights: np.ndarray, volume: float) -> float:
    return float(volume * np.real(np.sum(weights * np.conj(a) * b)))


def energy_estimate_monitor(
    state: SimState,
    s: float,
    dynamics: PerturbationDynamics,
    integrator: IntegratingFactorRK4 | None = None,
    dt: float | None = None,
) -> EnergyLedger:
    """
    rate is the exact instantaneous 2⟨ρ, ∂ₜρ⟩_{H^s}; rate_step is the forward
    difference across one trial step of size dt when an integrator is given.
    """
    if s < MIN_LEDGER_INDEX:
        raise DomainError(f"The energy ledger needs s >= {MIN_LEDGER_INDEX:g}, got {s}")
    grid = state.grid
    rho = state.rho
    weights = (1.0 + grid.wavenumber_squared) ** s
    tendency = dynamics.rhs(rho, state.t)
    rate = 2.0 * _sobolev_inner(rho.coefficients, tendency.coefficients, weights, grid.volume)
    energy = sobolev_norm(rho, s) ** 2

    rate_step = None
    if integrator is not None and dt:
        trial = integrator.step(rho, state.t, dt)
        rate_step = (sobolev_norm(trial, s) ** 2 - energy) / dt

    velocity = state.velocity
    velocity_sq = vector_sobolev_norm(velocity, s) ** 2
    gradient_term = grad_linf(velocity[-1]) * energy
    coupling_term = velocity_sq * math.sqrt(energy)
    dissipation_term = 0.5 * velocity_sq
    linear = rho.with_coefficients(dynamics.linear_symbol * rho.coefficients)
    linear_dissipation = 2.0 * _sobolev_inner(rho.coefficients, linear.coefficients, weights, grid.volume)

    forcing = gradient_term + coupling_term
    excess = rate + dissipation_term
    if forcing > 0:
        C_min = max(0.0, excess / forcing)
    else:
        C_min = 0.0 if excess <= 0 else math.inf
    return EnergyLedger(
        s=float(s),
        rate=rate,
        rate_step=rate_step,
        gradient_term=gradient_term,
        coupling_term=coupling_term,
        dissipation_term=dissipation_term,
        linear_dissipation=linear_dissipation,
        C_min=C_min,
    )


@dataclass
class DiagnosticsRecord:
    t: float
    step: int
    dt: float
    mean: float
    norms: Dict[str, float]
    bar_norm: float
    tilde_norm: float
    tilde_l2: float
    velocity_h3: List[float]
    velocity_l2: float
    grad_u_vertical_linf: float
    dx_rho_l2: float
    split_residual: float
    ledger: Optional[EnergyLedger] = None

    def to_row(self) -> dict:
        row = {
            "t": self.t,
            "step": self.step,
            "dt": self.dt,
            "mean": self.mean,
        }
        for label, value in self.norms.items():
            row[f"rho_H{label}"] = value
        row["bar_Hm"] = self.bar_norm
        row["tilde_Hm"] = self.tilde_norm
        row["tilde_L2"] = self.tilde_l2
        for index, value in enumerate(self.velocity_h3, start=1):
            row[f"u{index}_H3"] = value
        row["u_L2"] = self.velocity_l2
        row["grad_u_vertical_Linf"] = self.grad_u_vertical_linf
        row["dx_rho_L2"] = self.dx_rho_l2
        row["split_residual"] = self.split_residual
        ledger = self.ledger.to_dict() if self.ledger else {}
        for key in ("rate", "rate_step", "gradient_term", "coupling_term", "dissipation_term", "linear_dissipation", "C_min"):
            row[f"ledger_{key}"] = ledger.get(key)
        return row


def csv_columns(config: SimConfig) -> List[str]:
    """Fixed column schema of the diagnostics CSV for a configuration."""
    columns = ["t", "step", "dt", "mean"]
    columns += [f"rho_H{_index_label(s)}" for s in config.norms]
    columns += ["bar_Hm", "tilde_Hm", "tilde_L2"]
    columns += [f"u{i}_H3" for i in range(1, config.dimension + 1)]
    columns += ["u_L2", "grad_u_vertical_Linf", "dx_rho_L2", "split_residual"]
    columns += [
        f"ledger_{key}"
        for key in ("rate", "rate_step", "gradient_term", "coupling_term", "dissipation_term", "linear_dissipation", "C_min")
    ]
    return columns


def record(
    state: SimState,
    config: SimConfig,
    dynamics: PerturbationDynamics,
    dt: float,
    integrator: IntegratingFactorRK4 | None = None,
) -> DiagnosticsRecord:
    rho = state.rho
    bar, tilde = bar_tilde_split(rho)
    velocity = state.velocity
    ledger = None
    if config.energy_index is not None:
        ledger = energy_estimate_monitor(state, config.energy_index, dynamics, integrator, dt)
    return DiagnosticsRecord(
        t=state.t,
        step=state.step,
        dt=dt,
        mean=rho.mean,
        norms={_index_label(s): sobolev_norm(rho, s) for s in config.norms},
        bar_norm=sobolev_norm(bar, config.split_index),
        tilde_norm=sobolev_norm(tilde, config.split_index),
        tilde_l2=l2_norm(tilde),
        velocity_h3=[sobolev_norm(u, 3.0) for u in velocity],
        velocity_l2=vector_sobolev_norm(velocity),
        grad_u_vertical_linf=grad_linf(velocity[-1]),
        dx_rho_l2=horizontal_derivative_l2(rho),
        split_residual=dynamics.tilde_tendency_residual(rho),
        ledger=ledger,
    )


def series(records: Sequence[DiagnosticsRecord], key: str) -> np.ndarray:
    return np.array([r.to_row()[key] for r in records], dtype=np.float64)
