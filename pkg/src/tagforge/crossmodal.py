"""Two-layer net mapping Fisher vectors into the tag vector space.

The net is y = W2 tanh(W1 x + b1) + b2, trained to regress each video's
Fisher vector onto the tag vector of its class label.  The default
optimizer is full-batch gradient descent with momentum; any step that
would increase the loss is rejected and the learning rate halved, so
the accepted-loss sequence is non-increasing by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatchError, TagforgeError
from .fisher import FisherVector
from .tag2vec import TagVectors

NET_FORMAT_VERSION = 1


@dataclass
class NetConfig:
    hidden: int = 600
    max_iters: int = 1000
    optimizer: str = "full_batch_gd_momentum"  # or "minibatch_sgd"
    lr: float = 1e-2
    momentum: float = 0.9
    batch_size: int = 64
    weight_init_scale: float = 0.01
    seed: int = 0
    l2_reg: float = 1e-4

    def validate(self) -> None:
        if self.hidden < 1 or self.max_iters < 1:
            raise TagforgeError("hidden and max_iters must be >= 1")
        if self.lr <= 0:
            raise TagforgeError("lr must be > 0")
        if self.optimizer not in ("full_batch_gd_momentum", "minibatch_sgd"):
            raise TagforgeError(f"unknown optimizer: {self.optimizer!r}")


@dataclass
class TrainPair:
    fisher: np.ndarray
    target: np.ndarray
    class_stem: str


class Grads(NamedTuple):
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class TrainDiagnostics:
    accepted_losses: list[float] = field(default_factory=list)
    rejected_steps: int = 0
    final_lr: float = 0.0


@dataclass
class EmbeddingNet:
    w1: np.ndarray  # h x F
    b1: np.ndarray  # h
    w2: np.ndarray  # d x h
    b2: np.ndarray  # d
    diagnostics: TrainDiagnostics | None = None

    @property
    def f(self) -> int:
        return self.w1.shape[1]

    @property
    def h(self) -> int:
        return self.w1.shape[0]

    @property
    def d(self) -> int:
        return self.w2.shape[0]

    def copy(self) -> "EmbeddingNet":
        return EmbeddingNet(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


def _stack_batch(net: EmbeddingNet, batch: list[TrainPair]) -> tuple[np.ndarray, np.ndarray]:
    if not batch:
        raise TagforgeError("batch must be non-empty")
    x = np.stack([p.fisher for p in batch])
    t = np.stack([p.target for p in batch])
    if x.shape[1] != net.f:
        raise DimensionMismatchError(
            f"fisher vectors have {x.shape[1]} dims, net expects {net.f}"
        )
    if t.shape[1] != net.d:
        raise DimensionMismatchError(
            f"targets have {t.shape[1]} dims, net expects {net.d}"
        )
    return x, t


def loss_and_grad(
    net: EmbeddingNet, batch: list[TrainPair], l2_reg: float
) -> tuple[float, Grads]:
    """Mean squared error to the targets plus l2_reg * (||W1||^2 + ||W2||^2),
    with exact analytic gradients."""
    x, t = _stack_batch(net, batch)
    b = len(batch)
    z1 = x @ net.w1.T + net.b1
    a = np.tanh(z1)
    y = a @ net.w2.T + net.b2
    r = y - t
    loss = float((r * r).sum() / b)
    loss += float(l2_reg * ((net.w1 * net.w1).sum() + (net.w2 * net.w2).sum()))
    dy = 2.0 * r / b
    gb2 = dy.sum(axis=0)
    gw2 = dy.T @ a + 2.0 * l2_reg * net.w2
    da = dy @ net.w2
    dz1 = da * (1.0 - a * a)
    gb1 = dz1.sum(axis=0)
    gw1 = dz1.T @ x + 2.0 * l2_reg * net.w1
    return loss, Grads(gw1, gb1, gw2, gb2)


def _loss_only(net: EmbeddingNet, batch: list[TrainPair], l2_reg: float) -> float:
    x, t = _stack_batch(net, batch)
    with np.errstate(over="ignore"):  # divergent steps overflow to inf
        r = np.tanh(x @ net.w1.T + net.b1) @ net.w2.T + net.b2 - t
        return float(
            (r * r).sum() / len(batch)
            + l2_reg * ((net.w1 * net.w1).sum() + (net.w2 * net.w2).sum())
        )


def train_embedding(pairs: list[TrainPair], cfg: NetConfig | None = None) -> EmbeddingNet:
    """Train the embedding net and return the lowest-loss parameters."""
    cfg = cfg or NetConfig()
    cfg.validate()
    if not pairs:
        raise TagforgeError("need at least one training pair")
    f_dim = pairs[0].fisher.shape[0]
    d_dim = pairs[0].target.shape[0]
    for p in pairs:
        if p.fisher.shape != (f_dim,) or p.target.shape != (d_dim,):
            raise DimensionMismatchError(
                f"inconsistent pair dimensions for class {p.class_stem!r}"
            )

    rng = np.random.default_rng(cfg.seed)
    scale = cfg.weight_init_scale
    net = EmbeddingNet(
        w1=rng.normal(0.0, scale, size=(cfg.hidden, f_dim)),
        b1=np.zeros(cfg.hidden),
        w2=rng.normal(0.0, scale, size=(d_dim, cfg.hidden)),
        b2=np.zeros(d_dim),
    )
    if cfg.optimizer == "full_batch_gd_momentum":
        return _train_full_batch(net, pairs, cfg)
    return _train_minibatch(net, pairs, cfg, rng)


def _train_full_batch(net: EmbeddingNet, pairs, cfg: NetConfig) -> EmbeddingNet:
    diags = TrainDiagnostics()
    lr = cfg.lr
    vel = Grads(*(np.zeros_like(g) for g in (net.w1, net.b1, net.w2, net.b2)))
    loss = _loss_only(net, pairs, cfg.l2_reg)
    if not np.isfinite(loss):
        raise TagforgeError("divergence at iteration 0: non-finite loss")
    diags.accepted_losses.append(loss)
    best_net, best_loss = net.copy(), loss
    for it in range(1, cfg.max_iters + 1):
        _, g = loss_and_grad(net, pairs, cfg.l2_reg)
        vel = Grads(*(cfg.momentum * v - lr * gi for v, gi in zip(vel, g)))
        candidate = EmbeddingNet(
            net.w1 + vel.w1, net.b1 + vel.b1, net.w2 + vel.w2, net.b2 + vel.b2
        )
        cand_loss = _loss_only(candidate, pairs, cfg.l2_reg)
        if np.isfinite(cand_loss) and cand_loss <= loss:
            net, loss = candidate, cand_loss
            diags.accepted_losses.append(loss)
            if loss < best_loss:
                best_net, best_loss = net.copy(), loss
        else:
            vel = Grads(*(np.zeros_like(v) for v in vel))
            lr *= 0.5
            diags.rejected_steps += 1
    diags.final_lr = lr
    best_net.diagnostics = diags
    return best_net


def _train_minibatch(net: EmbeddingNet, pairs, cfg: NetConfig, rng) -> EmbeddingNet:
    diags = TrainDiagnostics()
    vel = Grads(*(np.zeros_like(g) for g in (net.w1, net.b1, net.w2, net.b2)))
    best_net = net.copy()
    best_loss = _loss_only(net, pairs, cfg.l2_reg)
    diags.accepted_losses.append(best_loss)
    steps = 0
    while steps < cfg.max_iters:
        order = rng.permutation(len(pairs))
        for start in range(0, len(pairs), cfg.batch_size):
            if steps >= cfg.max_iters:
                break
            batch = [pairs[i] for i in order[start : start + cfg.batch_size]]
            _, g = loss_and_grad(net, batch, cfg.l2_reg)
            vel = Grads(*(cfg.momentum * v - cfg.lr * gi for v, gi in zip(vel, g)))
            net = EmbeddingNet(
                net.w1 + vel.w1, net.b1 + vel.b1, net.w2 + vel.w2, net.b2 + vel.b2
            )
            steps += 1
            loss = _loss_only(net, pairs, cfg.l2_reg)
            if not np.isfinite(loss):
                raise TagforgeError(f"divergence at iteration {steps}: non-finite loss")
            diags.accepted_losses.append(loss)
            if loss < best_loss:
                best_net, best_loss = net.copy(), loss
    diags.final_lr = cfg.lr
    best_net.diagnostics = diags
    return best_net


def project(net: EmbeddingNet, fv: np.ndarray) -> np.ndarray:
    """Map a Fisher vector into the tag space."""
    fv = np.asarray(fv, dtype=np.float64)
    if fv.shape != (net.f,):
        raise DimensionMismatchError(f"fv has shape {fv.shape}, net expects ({net.f},)")
    return net.w2 @ np.tanh(net.w1 @ fv + net.b1) + net.b2


def nearest_class_accuracy(
    net: EmbeddingNet,
    labeled_pairs: list[TrainPair],
    class_vectors: dict[str, np.ndarray],
) -> float:
    """Fraction of pairs whose projection lands L2-closest to the tag
    vector of their own class."""
    if not labeled_pairs:
        raise TagforgeError("no pairs to score")
    stems = sorted(class_vectors)
    missing = {p.class_stem for p in labeled_pairs} - set(stems)
    if missing:
        raise TagforgeError(f"missing class vectors for: {sorted(missing)}")
    mat = np.stack([class_vectors[s] for s in stems])
    hits = 0
    for p in labeled_pairs:
        y = project(net, p.fisher)
        nearest = stems[int(np.argmin(np.linalg.norm(mat - y, axis=1)))]
        hits += nearest == p.class_stem
    return hits / len(labeled_pairs)


def build_train_pairs(
    fvs: list[FisherVector], labels: dict[str, str], tv: TagVectors
) -> list[TrainPair]:
    """Pair each video's Fisher vector with its class stem's tag vector."""
    pairs = []
    for fv in sorted(fvs, key=lambda f: f.video_id):
        if fv.video_id not in labels:
            raise TagforgeError(f"no class label for video {fv.video_id!r}")
        stem = labels[fv.video_id]
        pairs.append(TrainPair(fv.values, tv.vector(stem), stem))
    return pairs


def save_net(net: EmbeddingNet, path: str | Path) -> None:
    doc = {
        "version": NET_FORMAT_VERSION,
        "f": net.f,
        "h": net.h,
        "d": net.d,
        "w1": net.w1.tolist(),
        "b1": net.b1.tolist(),
        "w2": net.w2.tolist(),
        "b2": net.b2.tolist(),
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_net(path: str | Path) -> EmbeddingNet:
    path = Path(path)
    if not path.exists():
        raise TagforgeError(f"net file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        net = EmbeddingNet(
            w1=np.asarray(doc["w1"], dtype=np.float64),
            b1=np.asarray(doc["b1"], dtype=np.float64),
            w2=np.asarray(doc["w2"], dtype=np.float64),
            b2=np.asarray(doc["b2"], dtype=np.float64),
        )
        f, h, d = int(doc["f"]), int(doc["h"]), int(doc["d"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise TagforgeError(f"{path}: malformed net file") from None
    if net.w1.shape != (h, f) or net.b1.shape != (h,) or net.w2.shape != (d, h) or net.b2.shape != (d,):
        raise DimensionMismatchError(f"{path}: parameter shapes disagree with f/h/d")
    return net


def export_projections(
    net: EmbeddingNet,
    fvs: list[FisherVector],
    labels: dict[str, str],
    path: str | Path,
) -> None:
    """TSV rows video_id TAB class TAB comma-separated coordinates, for
    external plotting or t-SNE."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for fv in sorted(fvs, key=lambda f: f.video_id):
            if fv.video_id not in labels:
                raise TagforgeError(f"no class label for video {fv.video_id!r}")
            y = project(net, fv.values)
            coords = ",".join(repr(float(v)) for v in y)
            fh.write(f"{fv.video_id}\t{labels[fv.video_id]}\t{coords}\n")
