"""
Runner factory.

This module exposes a single `get_runner(kind)` function that returns the
runner implementation owning the given experiment kind.
"""

from core_utils.exceptions import ConfigurationError

from .analysis import FitRunner, StabilityFormsRunner, VerifyLemmasRunner
from .base import BaseRunner, Check, FitEntry, RunContext, RunnerResult
from .linear import LinearTorusRunner, PerturbedLinearRunner, SharpnessRunner, WholeSpaceRunner
from .simulation import SimulationRunner

RESUMABLE_KINDS = {"simulate2d", "simulate3d"}


def get_runner(kind: str) -> BaseRunner:
    """Return a runner instance for the given experiment kind."""
    normalized = (kind or "").lower()

    if normalized == "simulate2d":
        return SimulationRunner(dimension=2)
    if normalized == "simulate3d":
        return SimulationRunner(dimension=3)

    runners = {
        "linear-torus": LinearTorusRunner,
        "linear-whole-space": WholeSpaceRunner,
        "perturbed-linear": PerturbedLinearRunner,
        "sharpness": SharpnessRunner,
        "verify-lemmas": VerifyLemmasRunner,
        "stability-forms": StabilityFormsRunner,
        "fit": FitRunner,
    }
    if normalized in runners:
        return runners[normalized]()

    raise ConfigurationError(f"Unsupported experiment kind: {kind}")


__all__ = ["get_runner", "BaseRunner", "Check", "FitEntry", "RunContext", "RunnerResult", "RESUMABLE_KINDS"]
