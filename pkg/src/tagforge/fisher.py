"""Fisher-vector encoding of descriptor sets under a diagonal GMM.

The encoding stacks the mean-gradient block then the variance-gradient
block, component-major, giving 2*K*D values:

    u_kj = 1/(n sqrt(pi_k))   * sum_i gamma_ik * (x_ij - mu_kj) / sigma_kj
    v_kj = 1/(n sqrt(2 pi_k)) * sum_i gamma_ik * [((x_ij - mu_kj)/sigma_kj)^2 - 1]

Per-coordinate sums use exact (correctly rounded) accumulation so the
encoding is invariant to descriptor order and to duplicating the set.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import DescriptorSet
from .errors import (
    DimensionMismatchError,
    MalformedHeaderError,
    TagforgeError,
    TruncatedPayloadError,
)
from .gmm import GmmModel, _responsibility_matrix

FV_MAGIC = b"TFFV"
FV_VERSION = 1

NORMALIZATIONS = ("none", "ssqrt", "l2", "ssqrt_l2")


@dataclass
class FisherVector:
    video_id: str
    values: np.ndarray
    degenerate: bool = False  # all-zero encoding; L2 step skipped


def encode_fisher(
    gmm: GmmModel, ds: DescriptorSet, normalize: str = "ssqrt_l2"
) -> FisherVector:
    if normalize not in NORMALIZATIONS:
        raise TagforgeError(f"unknown normalization: {normalize!r}")
    x = ds.matrix
    n, d = x.shape
    if n == 0:
        raise TagforgeError(f"{ds.video_id}: empty descriptor set")
    if d != gmm.d:
        raise DimensionMismatchError(
            f"{ds.video_id}: descriptors have {d} dims, GMM expects {gmm.d}"
        )
    gamma = _responsibility_matrix(gmm, x)
    sigma = np.sqrt(gmm.variances)
    mean_block = np.empty((gmm.k, d))
    var_block = np.empty((gmm.k, d))
    for k in range(gmm.k):
        z = (x - gmm.means[k]) / sigma[k]
        gz = gamma[:, k : k + 1] * z
        gz2 = gamma[:, k : k + 1] * (z * z - 1.0)
        cu = 1.0 / (n * math.sqrt(gmm.weights[k]))
        cv = 1.0 / (n * math.sqrt(2.0 * gmm.weights[k]))
        for j in range(d):
            mean_block[k, j] = cu * math.fsum(gz[:, j])
            var_block[k, j] = cv * math.fsum(gz2[:, j])
    values = np.concatenate([mean_block.ravel(), var_block.ravel()])

    if normalize in ("ssqrt", "ssqrt_l2"):
        values = np.sign(values) * np.sqrt(np.abs(values))
    degenerate = False
    if normalize in ("l2", "ssqrt_l2"):
        norm = np.linalg.norm(values)
        if norm > 0.0:
            values = values / norm
        else:
            degenerate = True
    return FisherVector(ds.video_id, values, degenerate)


def save_fisher(fv: FisherVector, path: str | Path) -> None:
    """Binary format: ``TFFV``, u32 version=1, u32 length, little-endian
    float64 values.  One file per video, ``<video_id>.fv``."""
    with Path(path).open("wb") as fh:
        fh.write(FV_MAGIC)
        fh.write(struct.pack("<II", FV_VERSION, fv.values.size))
        fh.write(fv.values.astype("<f8").tobytes())


def load_fisher(path: str | Path) -> FisherVector:
    path = Path(path)
    if not path.exists():
        raise TagforgeError(f"fisher vector file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != FV_MAGIC:
        raise MalformedHeaderError(f"{path}: not a TFFV file")
    version, size = struct.unpack("<II", raw[4:12])
    if version != FV_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported TFFV version {version}")
    expected = 12 + 8 * size
    if len(raw) < expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} bytes for {size} values, found {len(raw)}"
        )
    if len(raw) > expected:
        raise TagforgeError(f"{path}: trailing data after {size} values")
    values = np.frombuffer(raw, dtype="<f8", offset=12).copy()
    return FisherVector(path.stem, values)


def load_fisher_dir(dir_path: str | Path) -> list[FisherVector]:
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise TagforgeError(f"fisher vector directory not found: {dir_path}")
    paths = sorted(dir_path.glob("*.fv"))
    if not paths:
        raise TagforgeError(f"no .fv files in {dir_path}")
    return [load_fisher(p) for p in paths]
