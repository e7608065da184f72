"""
Binary field checkpoints.

Layout:
  b"IPMF" | endianness tag b"<" or b">" | header (in that byte order):
    version u16, dimension u8, normalization tag 8s, points u32, length f64,
    metadata size u32
  | metadata (UTF-8 JSON) | complex128 coefficients, row-major over FFT-ordered
  wavenumbers.

Round trips are bit-exact.
"""
from __future__ import annotations

import json
import struct
import sys
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from core_utils.exceptions import ConfigurationError

from .fields import NORMALIZATION_TAG, SpectralField
from .grid import Grid

MAGIC = b"IPMF"
VERSION = 1
_HEADER = "HB8sIdI"


def encode_field(field: SpectralField, metadata: Dict[str, Any] | None = None) -> bytes:
    order = "<" if sys.byteorder == "little" else ">"
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    header = struct.pack(
        order + _HEADER,
        VERSION,
        field.grid.dimension,
        NORMALIZATION_TAG.encode("ascii").ljust(8, b"\0"),
        field.grid.points,
        field.grid.length,
        len(meta),
    )
    payload = np.ascontiguousarray(field.coefficients).astype(order + "c16", copy=False)
    return MAGIC + order.encode("ascii") + header + meta + payload.tobytes()


def decode_field(blob: bytes) -> Tuple[SpectralField, Dict[str, Any]]:
    if blob[:4] != MAGIC:
        raise ConfigurationError("Not a field checkpoint (bad magic)")
    order = blob[4:5].decode("ascii")
    if order not in "<>":
        raise ConfigurationError(f"Unknown endianness tag {order!r}")
    offset = 5
    size = struct.calcsize(order + _HEADER)
    version, dimension, tag, points, length, meta_size = struct.unpack(
        order + _HEADER, blob[offset:offset + size]
    )
    if version != VERSION:
        raise ConfigurationError(f"Unsupported checkpoint version {version}")
    if tag.rstrip(b"\0").decode("ascii") != NORMALIZATION_TAG:
        raise ConfigurationError(f"Checkpoint normalization {tag!r} is not {NORMALIZATION_TAG!r}")
    offset += size
    metadata = json.loads(blob[offset:offset + meta_size].decode("utf-8"))
    offset += meta_size
    grid = Grid(dimension=dimension, points=points, length=length)
    count = points ** dimension
    if len(blob) - offset != 16 * count:
        raise ConfigurationError(
            f"Checkpoint payload holds {len(blob) - offset} bytes, expected {16 * count}"
        )
    coefficients = np.frombuffer(blob, dtype=order + "c16", count=count, offset=offset)
    return SpectralField(grid, coefficients.astype(np.complex128).reshape(grid.shape)), metadata


def write_checkpoint(path: Path, field: SpectralField, metadata: Dict[str, Any] | None = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(field, metadata))
    return path


def read_checkpoint(path: Path) -> Tuple[SpectralField, Dict[str, Any]]:
    return decode_field(Path(path).read_bytes())
