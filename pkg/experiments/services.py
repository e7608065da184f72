"""
Experiment execution, run manifests and consolidated reports.

A run directory holds the runner's artifacts plus manifest.json, written
last, which lists every artifact with its sha256 digest.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from django.conf import settings
from django.utils import timezone
from jinja2 import Environment, FileSystemLoader, StrictUndefined

import core
from core_utils.exceptions import ConfigurationError, IntegrityError, IPMError
from core_utils.formatting import write_json

from .runners import RESUMABLE_KINDS, RunContext, get_runner
from .spec import ExperimentSpec

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent / "templates" / "experiments"

# decay exponents the report table is built around
TARGET_EXPONENTS = (-0.25, -0.75, -1.25, -2.5)


@dataclass
class RunManifest:
    spec: Dict[str, Any]
    tool_version: str
    tolerance_profile: str
    started_at: str
    finished_at: str = ""
    status: str = "running"
    exit_code: int = 0
    files: Dict[str, str] = field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        try:
            return cls(**data)
        except TypeError as exc:
            raise IntegrityError(f"Manifest has an unexpected layout: {exc}") from exc


class ManifestService:
    """Digests, writes and verifies run manifests."""

    MANIFEST_NAME = "manifest.json"
    CHUNK_SIZE = 1 << 20

    @classmethod
    def digest(cls, path: Path) -> str:
        sha = hashlib.sha256()
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(cls.CHUNK_SIZE), b""):
                sha.update(chunk)
        return sha.hexdigest()

    @classmethod
    def inventory(cls, directory: Path, names: List[str]) -> Dict[str, str]:
        """Digest of every listed artifact that exists, keyed by relative path."""
        directory = Path(directory)
        return {
            name: cls.digest(directory / name)
            for name in sorted(set(names))
            if name != cls.MANIFEST_NAME and (directory / name).is_file()
        }

    @classmethod
    def write(cls, directory: Path, manifest: RunManifest) -> Path:
        return write_json(Path(directory) / cls.MANIFEST_NAME, manifest.to_dict())

    @classmethod
    def load(cls, directory: Path) -> RunManifest:
        path = Path(directory) / cls.MANIFEST_NAME
        if not path.is_file():
            raise IntegrityError(f"No {cls.MANIFEST_NAME} in {directory}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"{path} is not valid JSON: {exc}") from exc
        return RunManifest.from_dict(data)

    @classmethod
    def verify(cls, directory: Path) -> RunManifest:
        """Load the manifest and re-digest every file it lists."""
        directory = Path(directory)
        manifest = cls.load(directory)
        for name, expected in manifest.files.items():
            path = directory / name
            if not path.is_file():
                raise IntegrityError(f"Listed file {name} is missing from {directory}")
            actual = cls.digest(path)
            if actual != expected:
                raise IntegrityError(f"Digest mismatch for {name}: manifest {expected[:12]}, file {actual[:12]}")
        return manifest


def tolerance_profile(name: str) -> Dict[str, float]:
    profiles = settings.IPM_TOLERANCE_PROFILES
    if name not in profiles:
        raise ConfigurationError(f"Unknown tolerance profile '{name}', expected one of {sorted(profiles)}")
    return profiles[name]


def execute(
    spec: ExperimentSpec,
    out_dir: Path,
    profile: str = "default",
    resume: Path | None = None,
) -> RunManifest:
    """
    Run one experiment into out_dir. Errors raised by the owning module are
    captured into the manifest; the exit code reflects pass/fail.
    """
    out_dir = Path(out_dir)
    tolerances = tolerance_profile(profile)
    if resume is not None:
        if spec.kind not in RESUMABLE_KINDS:
            raise ConfigurationError(f"Experiments of kind '{spec.kind}' cannot resume from a checkpoint")
        resume = Path(resume)
        if not resume.is_file():
            raise ConfigurationError(f"Checkpoint {resume} does not exist")
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        spec=spec.to_dict(),
        tool_version=core.__version__,
        tolerance_profile=profile,
        started_at=timezone.now().isoformat(),
    )
    runner = get_runner(spec.kind)
    context = RunContext(out_dir=out_dir, tolerance_profile=profile, tolerances=tolerances, resume=resume)
    logger.info("Experiment started", extra={"kind": spec.kind, "out_dir": str(out_dir), "seed": spec.seed})
    files: List[str] = []
    try:
        result = runner.run(spec, context)
        files = result.files
        manifest.status = result.status
        manifest.exit_code = 0 if result.passed else 1
    except IPMError as exc:
        logger.error("Experiment failed", exc_info=True, extra={"kind": spec.kind, "error": type(exc).__name__})
        manifest.status = "error"
        manifest.exit_code = exc.exit_code
        manifest.error = exc.to_dict()
        # whatever the runner managed to write is still inventoried
        files = [str(path.relative_to(out_dir)) for path in sorted(out_dir.rglob("*")) if path.is_file()]
    manifest.files = ManifestService.inventory(out_dir, files)
    manifest.finished_at = timezone.now().isoformat()
    ManifestService.write(out_dir, manifest)
    logger.info(
        "Experiment finished",
        extra={"kind": spec.kind, "status": manifest.status, "exit_code": manifest.exit_code},
    )
    return manifest


def _nearest_target(exponent: float) -> float:
    return min(TARGET_EXPONENTS, key=lambda target: abs(target - exponent))


def build_report(run_dir: Path) -> Dict[str, Any]:
    """Verified manifest + summary.json → one table of fitted exponents against their targets."""
    run_dir = Path(run_dir)
    manifest = ManifestService.verify(run_dir)
    summary_path = run_dir / "summary.json"
    if "summary.json" not in manifest.files:
        raise IntegrityError(f"{run_dir} has no digest-listed summary.json")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))

    rows = []
    for fit in summary.get("fits", []):
        target = fit.get("target")
        if target is None:
            target = _nearest_target(fit["exponent"])
        tolerance = fit.get("tolerance")
        deviation = fit["exponent"] - target
        rows.append(
            {
                "quantity": fit["quantity"],
                "exponent": fit["exponent"],
                "target": target,
                "deviation": deviation,
                "tolerance": tolerance,
                "within": None if tolerance is None else abs(deviation) <= tolerance,
                "window": fit.get("window"),
            }
        )
    return {
        "run_dir": str(run_dir),
        "kind": manifest.spec.get("kind"),
        "status": manifest.status,
        "exit_code": manifest.exit_code,
        "tool_version": manifest.tool_version,
        "tolerance_profile": manifest.tolerance_profile,
        "generated_at": timezone.now().isoformat(),
        "targets": list(TARGET_EXPONENTS),
        "fits": rows,
        "checks": summary.get("checks", []),
        "box_sweep": summary.get("summary", {}).get("box_sweep", []),
        "box_trend": summary.get("summary", {}).get("box_trend", {}),
    }


def render_report(report: Dict[str, Any]) -> str:
    environment = Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    environment.filters["num"] = lambda value: "" if value is None else format(float(value), ".6g")
    return environment.get_template("report.md.j2").render(report=report)


def write_report(run_dir: Path, out_dir: Path | None = None) -> Dict[str, Path]:
    report = build_report(run_dir)
    out_dir = Path(out_dir) if out_dir else Path(run_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = write_json(out_dir / "report.json", report)
    markdown_path = out_dir / "report.md"
    markdown_path.write_text(render_report(report), encoding="utf-8")
    logger.info("Report written", extra={"run_dir": str(run_dir), "fits": len(report["fits"])})
    return {"json": json_path, "markdown": markdown_path}
