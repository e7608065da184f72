"""
Output helpers: every float written to CSV carries 17 significant digits so
that files round-trip bit-exactly and repeated runs are byte-identical.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from django.core.serializers.json import DjangoJSONEncoder


def format_float(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, (int, float)) or hasattr(value, "dtype"):
        return format(float(value), ".17g")
    return str(value)


class CSVSeriesWriter:
    """Append-only CSV writer with a fixed column schema."""

    def __init__(self, path: Path, columns: Sequence[str]):
        self.path = Path(path)
        self.columns = list(columns)
        self._handle = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(self.columns)

    def write(self, row: Mapping[str, Any]) -> None:
        self._writer.writerow([format_float(row.get(column)) for column in self.columns])

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "CSVSeriesWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    with CSVSeriesWriter(path, columns) as writer:
        for row in rows:
            writer.write(row)
    return Path(path)


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def write_json(path: Path, payload: Any) -> Path:
    Path(path).write_text(
        json.dumps(payload, cls=DjangoJSONEncoder, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return Path(path)
