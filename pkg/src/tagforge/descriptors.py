"""Per-video descriptor matrices and their binary file format.

Layout (little-endian): magic ``TFDS``, u32 version=1, u32 n, u32 d,
then n*d float32 values row-major.  One file per video, named
``<video_id>.tfds``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    MalformedHeaderError,
    TagforgeError,
    TruncatedPayloadError,
)

MAGIC = b"TFDS"
VERSION = 1


@dataclass
class DescriptorSet:
    video_id: str
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] < 1:
            raise TagforgeError("descriptor matrix must be n x d with n >= 1")
        if not np.isfinite(self.matrix).all():
            raise TagforgeError(f"{self.video_id}: non-finite descriptor values")


def save_descriptors(ds: DescriptorSet, path: str | Path) -> None:
    n, d = ds.matrix.shape
    payload = ds.matrix.astype("<f4").tobytes(order="C")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, n, d))
        fh.write(payload)


def load_descriptors(path: str | Path) -> DescriptorSet:
    path = Path(path)
    if not path.exists():
        raise TagforgeError(f"descriptor file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise MalformedHeaderError(f"{path}: not a TFDS file")
    version, n, d = struct.unpack("<III", raw[4:16])
    if version != VERSION:
        raise MalformedHeaderError(f"{path}: unsupported TFDS version {version}")
    if n < 1 or d < 1:
        raise DimensionMismatchError(f"{path}: header claims n={n}, d={d}")
    expected = 16 + 4 * n * d
    if len(raw) < expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} bytes for {n}x{d}, found {len(raw)}"
        )
    if len(raw) > expected:
        raise TagforgeError(f"{path}: trailing data after {n}x{d} payload")
    matrix = np.frombuffer(raw, dtype="<f4", offset=16).reshape(n, d).astype(np.float64)
    return DescriptorSet(path.stem, matrix)


def load_descriptor_dir(dir_path: str | Path) -> list[DescriptorSet]:
    """All .tfds files in a directory, sorted by video id."""
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise TagforgeError(f"descriptor directory not found: {dir_path}")
    paths = sorted(dir_path.glob("*.tfds"))
    if not paths:
        raise TagforgeError(f"no .tfds files in {dir_path}")
    return [load_descriptors(p) for p in paths]
