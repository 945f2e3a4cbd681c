"""Small shared helpers: seed derivation and content hashing."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

_MASK63 = (1 << 63) - 1


def derive_seed(seed: int, stage_tag: str) -> int:
    """Per-stage seed: global seed XOR a stable hash of the stage tag."""
    tag_hash = int.from_bytes(
        hashlib.sha256(stage_tag.encode("utf-8")).digest()[:8], "little"
    )
    return (seed ^ tag_hash) & _MASK63


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()
