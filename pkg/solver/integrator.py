"""
Integrating-factor RK4 around the exact linear multiplier e^{-K𝒫 dt}.

With E = e^{L dt}, E₂ = e^{L dt/2}:
    k1 = N(ρ)
    k2 = N(E₂(ρ + dt/2·k1))
    k3 = N(E₂ρ + dt/2·k2)
    k4 = N(Eρ + dt·E₂k3)
    ρ⁺ = Eρ + dt/6·(E k1 + 2E₂(k2 + k3) + k4)
Negative dt is allowed (time-reversal audits).
"""
from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

from spectral.fields import SpectralField

from .dynamics import PerturbationDynamics


class IntegratingFactorRK4:
    def __init__(self, dynamics: PerturbationDynamics):
        self.dynamics = dynamics
        self._factors: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}

    def factors(self, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        if dt not in self._factors:
            if len(self._factors) > 8:
                self._factors.clear()
            symbol = self.dynamics.linear_symbol
            self._factors[dt] = (np.exp(symbol * dt), np.exp(symbol * (0.5 * dt)))
        return self._factors[dt]

    def step(self, rho: SpectralField, t: float, dt: float) -> SpectralField:
        E, E2 = self.factors(dt)
        N = self.dynamics.nonlinear_part
        c = rho.coefficients
        half = 0.5 * dt

        k1 = N(rho, t).coefficients
        k2 = N(rho.with_coefficients(E2 * (c + half * k1)), t + half).coefficients
        k3 = N(rho.with_coefficients(E2 * c + half * k2), t + half).coefficients
        k4 = N(rho.with_coefficients(E * c + dt * (E2 * k3)), t + dt).coefficients
        return rho.with_coefficients(E * c + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4))
