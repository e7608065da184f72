"""Experiment documents: YAML text → validated ExperimentSpec."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from core_utils.exceptions import ConfigurationError

from .serializers import ExperimentSpecSerializer, flatten_errors

logger = logging.getLogger(__name__)


def _plain(value):
    # DRF hands back OrderedDicts and ReturnLists; manifests want plain JSON types
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output: Optional[str] = None
    preset: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, *, seed: int | None = None, output: str | None = None) -> "ExperimentSpec":
        return ExperimentSpec(
            kind=self.kind,
            parameters=self.parameters,
            seed=self.seed if seed is None else seed,
            output=self.output if output is None else output,
            preset=self.preset,
        )


def validate_document(document: Any) -> ExperimentSpec:
    if not isinstance(document, dict):
        raise ConfigurationError("Experiment document must be a mapping with at least a 'kind' key")
    serializer = ExperimentSpecSerializer(data=document)
    if not serializer.is_valid():
        messages = flatten_errors(serializer.errors)
        raise ConfigurationError("Invalid experiment document:\n  " + "\n  ".join(messages))
    data = _plain(serializer.validated_data)
    spec = ExperimentSpec(
        kind=data["kind"],
        parameters=data["parameters"],
        seed=data["seed"],
        output=data.get("output"),
        preset=data.get("preset"),
    )
    logger.debug("Experiment document validated", extra={"kind": spec.kind, "seed": spec.seed})
    return spec


def parse_config(text: str) -> ExperimentSpec:
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Experiment document is not valid YAML: {exc}") from exc
    return validate_document(document)


def load_config(path: Path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Configuration file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"))
