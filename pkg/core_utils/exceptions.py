"""
Exception hierarchy shared by every app.

Each class carries the process exit code the CLI reports when the error
escapes an experiment.
"""
from __future__ import annotations

from typing import Any, Dict, Sequence


class IPMError(Exception):
    """Base class for all laboratory errors."""

    exit_code: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": self.__class__.__name__,
            "detail": str(self),
            "exit_code": self.exit_code,
        }


class ConfigurationError(IPMError, ValueError):
    """Invalid grid, shape mismatch or invalid experiment document."""

    exit_code = 2


class DomainError(ConfigurationError):
    """Argument outside the operation's domain (negative time, s below range)."""


class PreconditionError(ConfigurationError):
    """Input violates an operation precondition."""


class NumericError(IPMError, ArithmeticError):
    exit_code = 3


class NonFiniteSymbolError(NumericError):
    def __init__(self, name: str, wavevector: Sequence[float]):
        self.wavevector = tuple(float(k) for k in wavevector)
        super().__init__(f"Multiplier '{name}' is not finite at k = {self.wavevector}")


class BlowUpError(NumericError):
    def __init__(self, t: float, max_coefficient: float):
        self.t = t
        self.max_coefficient = max_coefficient
        super().__init__(
            f"Non-finite state at t = {t:.6g} (max |coefficient| = {max_coefficient:.6g})"
        )

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({"t": self.t, "max_coefficient": self.max_coefficient})
        return data


class StabilityError(NumericError):
    def __init__(self, growth: float, dt: float):
        self.growth = growth
        self.dt = dt
        super().__init__(
            f"L2 norm grew by a factor {growth:.12g} in one step of dt = {dt:.6g}; "
            f"retry with dt <= {dt / 2:.6g}"
        )


class CFLViolation(NumericError):
    def __init__(self, courant: float, limit: float, advised_dt: float):
        self.courant = courant
        self.limit = limit
        self.advised_dt = advised_dt
        super().__init__(
            f"Courant number {courant:.4g} exceeds {limit:.4g}; use dt <= {advised_dt:.6g}"
        )


class QuadratureError(NumericError):
    def __init__(self, achieved: float, requested: float):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            f"Quadrature did not converge: error {achieved:.3g} > tolerance {requested:.3g}"
        )


class FitError(IPMError, ValueError):
    def __init__(self, message: str, indices: Sequence[int] = ()):
        self.indices = list(indices)
        if self.indices:
            message = f"{message} (offending indices: {self.indices})"
        super().__init__(message)


class IntegrityError(IPMError):
    """Run directory is missing its manifest or a file digest does not match."""

    exit_code = 2
