"""Skip-gram negative-sampling embeddings over hash-tag sentences.

Single-worker training is bit-reproducible for a fixed seed: parameter
init, frequency subsampling and noise draws all come from one seeded
generator consumed in a fixed order.  The optional multi-worker mode
splits sentences across threads that update shared matrices without
locks, which trades reproducibility for speed.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import (
    DimensionMismatchError,
    MalformedHeaderError,
    TagforgeError,
    TruncatedPayloadError,
)

NOISE_POWER = 0.75


@dataclass
class T2VConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 15
    initial_lr: float = 0.025
    min_lr: float = 1e-4
    subsample_t: float = 1e-4
    seed: int = 1

    def validate(self) -> None:
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise TagforgeError("dim, window, negatives and epochs must be >= 1")
        if self.initial_lr <= 0:
            raise TagforgeError("initial_lr must be > 0")


@dataclass
class TagVectors:
    stems: list[str]
    input_vectors: np.ndarray
    context_vectors: np.ndarray | None = None
    counts: list[int] | None = None
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.stems)}
        if self.input_vectors.shape[0] != len(self.stems):
            raise DimensionMismatchError("vector row count != vocabulary size")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, stem: str) -> bool:
        return stem in self._index

    def index(self, stem: str) -> int:
        try:
            return self._index[stem]
        except KeyError:
            raise TagforgeError(f"unknown stem: {stem!r}") from None

    def vector(self, stem: str) -> np.ndarray:
        return self.input_vectors[self.index(stem)]


class NoiseSampler:
    """Draws noise stems with probability proportional to count^0.75."""

    def __init__(self, counts: np.ndarray, power: float = NOISE_POWER):
        weights = np.asarray(counts, dtype=np.float64) ** power
        total = weights.sum()
        if total <= 0:
            raise TagforgeError("noise distribution has no mass")
        self.probs = weights / total
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.searchsorted(self._cum, rng.random(n), side="right")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def _keep_probs(counts: np.ndarray, subsample_t: float) -> np.ndarray:
    if subsample_t <= 0:
        return np.ones(len(counts))
    freqs = counts / counts.sum()
    ratio = subsample_t / freqs
    return np.minimum(1.0, np.sqrt(ratio) + ratio)


def _train_span(
    sentences: list[np.ndarray],
    w_in: np.ndarray,
    w_out: np.ndarray,
    cfg: T2VConfig,
    sampler: NoiseSampler,
    keep: np.ndarray,
    rng: np.random.Generator,
    total_tokens: int,
    record_loss: bool,
) -> list[float]:
    labels = np.zeros(cfg.negatives + 1)
    labels[0] = 1.0
    epoch_losses = []
    processed = 0
    for _ in range(cfg.epochs):
        loss_sum = 0.0
        pair_count = 0
        for sent in sentences:
            progress = processed / (cfg.epochs * total_tokens + 1)
            lr = max(cfg.min_lr, cfg.initial_lr * (1.0 - progress))
            processed += len(sent)
            if cfg.subsample_t > 0:
                kept = sent[rng.random(len(sent)) < keep[sent]]
            else:
                kept = sent
            n = len(kept)
            if n < 2:
                continue
            for i in range(n):
                center = kept[i]
                lo = max(0, i - cfg.window)
                hi = min(n, i + cfg.window + 1)
                l1 = w_in[center]
                for j in range(lo, hi):
                    if j == i:
                        continue
                    ctx = kept[j]
                    negs = sampler.draw(rng, cfg.negatives)
                    targets = np.concatenate(([ctx], negs[negs != ctx]))
                    rows = w_out[targets]
                    scores = rows @ l1
                    if record_loss:
                        # -log sigma(s_pos) - sum log sigma(-s_neg)
                        loss_sum += np.logaddexp(0.0, -scores[0])
                        loss_sum += np.logaddexp(0.0, scores[1:]).sum()
                        pair_count += 1
                    g = (labels[: len(targets)] - _sigmoid(scores)) * lr
                    np.add.at(w_out, targets, g[:, None] * l1)
                    w_in[center] = l1 + rows.T @ g
                    l1 = w_in[center]
        if record_loss:
            epoch_losses.append(loss_sum / max(1, pair_count))
    return epoch_losses


def train_tag2vec(corpus: Corpus, cfg: T2VConfig, workers: int = 1) -> TagVectors:
    """Train embeddings on the trainable sentences of a corpus."""
    cfg.validate()
    encoded = [np.asarray(s, dtype=np.int64) for s in corpus.trainable_sentences()]
    if not encoded:
        raise TagforgeError("no trainable sentences")
    if len(corpus.vocab) < 2:
        raise TagforgeError("vocabulary too small for negative sampling")

    vocab_size = len(corpus.vocab)
    counts = np.asarray(corpus.vocab.counts, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((vocab_size, cfg.dim)) - 0.5) / cfg.dim
    w_out = np.zeros((vocab_size, cfg.dim))
    sampler = NoiseSampler(counts)
    keep = _keep_probs(counts, cfg.subsample_t)
    total_tokens = int(sum(len(s) for s in encoded))

    if workers <= 1:
        losses = _train_span(
            encoded, w_in, w_out, cfg, sampler, keep, rng,
            total_tokens, record_loss=True,
        )
    else:
        losses = []
        spans = [encoded[i::workers] for i in range(workers)]
        threads = [
            threading.Thread(
                target=_train_span,
                args=(span, w_in, w_out, cfg, sampler, keep,
                      np.random.default_rng(cfg.seed + 1 + t),
                      total_tokens, False),
            )
            for t, span in enumerate(spans)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    return TagVectors(
        stems=list(corpus.vocab.stems),
        input_vectors=w_in,
        context_vectors=w_out,
        counts=[int(c) for c in corpus.vocab.counts],
        epoch_losses=losses,
    )


def similarity(tv: TagVectors, a: str, b: str) -> float:
    """Cosine similarity of two stems' input vectors."""
    va, vb = tv.vector(a), tv.vector(b)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(va @ vb / (na * nb))


def nearest_tags(
    tv: TagVectors,
    query: str | np.ndarray,
    k: int,
    metric: str = "l2",
    exclude: frozenset[str] | set[str] = frozenset(),
) -> list[tuple[str, float]]:
    """Exhaustively scan all vectors for the k nearest stems.

    l2 ranks by ascending distance, cosine by descending similarity;
    ties break lexicographically on the stem.
    """
    if k < 1:
        raise TagforgeError("k must be >= 1")
    if metric not in ("l2", "cosine"):
        raise TagforgeError(f"unknown metric: {metric!r}")
    if isinstance(query, str):
        q = tv.vector(query)
    else:
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (tv.dim,):
            raise DimensionMismatchError(
                f"query vector has shape {q.shape}, expected ({tv.dim},)"
            )
    mat = tv.input_vectors
    if metric == "l2":
        scores = np.linalg.norm(mat - q, axis=1)
        order_sign = 1.0
    else:
        norms = np.linalg.norm(mat, axis=1) * np.linalg.norm(q)
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(norms > 0, mat @ q / np.where(norms > 0, norms, 1.0), 0.0)
        order_sign = -1.0
    ranked = sorted(
        (
            (order_sign * float(scores[i]), stem, float(scores[i]))
            for i, stem in enumerate(tv.stems)
            if stem not in exclude
        ),
    )
    return [(stem, score) for _, stem, score in ranked[:k]]


def save_vectors(tv: TagVectors, path: str | Path, include_context: bool = False) -> None:
    """Write the bit-exact text format: ``T2V <count> <dim>`` header, then
    one line per stem with each double as 16 little-endian hex digits."""
    path = Path(path)
    _write_matrix(path, tv.stems, tv.input_vectors)
    if include_context:
        if tv.context_vectors is None:
            raise TagforgeError("no context vectors to save")
        _write_matrix(Path(str(path) + ".ctx"), tv.stems, tv.context_vectors)


def _write_matrix(path: Path, stems: list[str], mat: np.ndarray) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"T2V {len(stems)} {mat.shape[1]}\n")
        for stem, row in zip(stems, mat):
            encoded = " ".join(struct.pack("<d", float(x)).hex() for x in row)
            fh.write(f"{stem} {encoded}\n")


def load_vectors(path: str | Path, load_context: bool = False) -> TagVectors:
    path = Path(path)
    if not path.exists():
        raise TagforgeError(f"vector file not found: {path}")
    stems, mat = _read_matrix(path)
    ctx = None
    if load_context:
        ctx_path = Path(str(path) + ".ctx")
        ctx_stems, ctx = _read_matrix(ctx_path)
        if ctx_stems != stems or ctx.shape != mat.shape:
            raise DimensionMismatchError("context file does not match vector file")
    return TagVectors(stems=stems, input_vectors=mat, context_vectors=ctx)


def _read_matrix(path: Path) -> tuple[list[str], np.ndarray]:
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 3 or parts[0] != "T2V":
            raise MalformedHeaderError(f"{path}: bad header {header!r}")
        try:
            count, dim = int(parts[1]), int(parts[2])
        except ValueError:
            raise MalformedHeaderError(f"{path}: bad header {header!r}") from None
        if count < 0 or dim < 1:
            raise MalformedHeaderError(f"{path}: bad header {header!r}")
        stems: list[str] = []
        mat = np.empty((count, dim))
        for i in range(count):
            line = fh.readline()
            if not line:
                raise TruncatedPayloadError(
                    f"{path}: header claims {count} words, found {i} rows"
                )
            fields = line.split()
            if len(fields) != dim + 1:
                raise DimensionMismatchError(
                    f"{path}: row {i} has {len(fields) - 1} values, expected {dim}"
                )
            stems.append(fields[0])
            try:
                row = [struct.unpack("<d", bytes.fromhex(h))[0] for h in fields[1:]]
            except (ValueError, struct.error):
                raise TagforgeError(f"{path}: row {i} has malformed hex doubles") from None
            mat[i] = row
        if fh.readline():
            raise TagforgeError(f"{path}: trailing data after {count} rows")
    return stems, mat
