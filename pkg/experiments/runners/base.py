"""
Base runner interface.

Each experiment kind has a runner that inherits from `BaseRunner` and
implements `run`, writing its artifacts into the output directory.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from core_utils.formatting import write_json


@dataclass(frozen=True)
class RunContext:
    """Where a runner writes and which tolerances it is judged by."""

    out_dir: Path
    tolerance_profile: str
    tolerances: Dict[str, float]
    resume: Optional[Path] = None


@dataclass
class Check:
    """One declared tolerance: measured `relation` limit."""

    name: str
    measured: float
    limit: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.measured):
            return False
        if self.relation == "<=":
            return self.measured <= self.limit
        return self.measured >= self.limit

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["passed"] = self.passed
        return data


@dataclass
class FitEntry:
    """A fitted decay exponent, optionally compared against a target rate."""

    quantity: str
    exponent: float
    window: List[float]
    quality: float
    target: Optional[float] = None
    tolerance: Optional[float] = None

    @property
    def deviation(self) -> Optional[float]:
        return None if self.target is None else self.exponent - self.target

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["deviation"] = self.deviation
        return data


@dataclass
class RunnerResult:
    """
    Standardized result of a runner.

    The summary is written to summary.json; `files` lists the artifacts the
    runner produced, relative to the output directory.
    """

    kind: str
    files: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    fits: List[FitEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "status": self.status,
            "summary": self.summary,
            "checks": [check.to_dict() for check in self.checks],
            "fits": [fit.to_dict() for fit in self.fits],
        }


class BaseRunner:
    """
    Abstract runner.

    Concrete runners must implement `run`.
    """

    name: str = "base"
    SUMMARY_NAME = "summary.json"

    def run(self, spec, context: RunContext) -> RunnerResult:
        raise NotImplementedError("run() must be implemented by subclasses")

    def write_summary(self, out_dir: Path, result: RunnerResult) -> RunnerResult:
        write_json(Path(out_dir) / self.SUMMARY_NAME, result.to_dict())
        if self.SUMMARY_NAME not in result.files:
            result.files.append(self.SUMMARY_NAME)
        return result
