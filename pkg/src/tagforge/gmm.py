"""Diagonal-covariance Gaussian mixtures fit by EM.

All density work happens in log space; the M-step uses biased (1/n)
variance estimates with a per-dimension floor derived from the data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, TagforgeError

GMM_FORMAT_VERSION = 1


@dataclass
class EmConfig:
    max_iters: int = 100
    ll_rel_tol: float = 1e-6
    variance_floor_scale: float = 1e-6  # times per-dimension data variance
    seed: int = 0
    init: str = "kmeans_pp"  # or "random_points"

    def validate(self) -> None:
        if self.max_iters < 1:
            raise TagforgeError("max_iters must be >= 1")
        if self.ll_rel_tol <= 0 or self.variance_floor_scale <= 0:
            raise TagforgeError("tolerances must be > 0")
        if self.init not in ("kmeans_pp", "random_points"):
            raise TagforgeError(f"unknown init: {self.init!r}")


@dataclass
class EmDiagnostics:
    ll_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    reseeded_components: int = 0


@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    diagnostics: EmDiagnostics | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if self.means.shape != self.variances.shape or self.weights.shape != (self.k,):
            raise DimensionMismatchError("inconsistent GMM parameter shapes")

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]


def _check_data(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise TagforgeError("descriptor data must be a 2-d matrix")
    if not np.isfinite(data).all():
        raise TagforgeError("non-finite values in descriptor data")
    return data


def _log_joint(gmm: GmmModel, data: np.ndarray) -> np.ndarray:
    """n x K matrix of log(pi_k) + log N(x_i; mu_k, sigma2_k)."""
    diff = data[:, None, :] - gmm.means[None, :, :]
    quad = np.sum(diff * diff / gmm.variances[None, :, :], axis=2)
    log_norm = np.sum(np.log(2.0 * np.pi * gmm.variances), axis=1)
    return np.log(gmm.weights)[None, :] - 0.5 * (log_norm[None, :] + quad)


def _logsumexp_rows(logp: np.ndarray) -> np.ndarray:
    peak = logp.max(axis=1, keepdims=True)
    return (peak + np.log(np.exp(logp - peak).sum(axis=1, keepdims=True))).ravel()


def log_likelihood(gmm: GmmModel, data: np.ndarray) -> float:
    """Total log mixture density of the data rows."""
    data = _check_data(data)
    if data.shape[1] != gmm.d:
        raise DimensionMismatchError(
            f"data has {data.shape[1]} columns, model expects {gmm.d}"
        )
    return float(_logsumexp_rows(_log_joint(gmm, data)).sum())


def responsibilities(gmm: GmmModel, x: np.ndarray) -> np.ndarray:
    """Posterior component probabilities for one descriptor."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (gmm.d,):
        raise DimensionMismatchError(f"x has shape {x.shape}, expected ({gmm.d},)")
    if not np.isfinite(x).all():
        raise TagforgeError("non-finite descriptor")
    return _responsibility_matrix(gmm, x[None, :])[0]


def _responsibility_matrix(gmm: GmmModel, data: np.ndarray) -> np.ndarray:
    logp = _log_joint(gmm, data)
    logp -= logp.max(axis=1, keepdims=True)
    gamma = np.exp(logp)
    gamma /= gamma.sum(axis=1, keepdims=True)
    return gamma


def _kmeans_pp_means(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = data.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((data - data[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            chosen.append(int(rng.integers(n)))
        else:
            chosen.append(int(rng.choice(n, p=d2 / total)))
        d2 = np.minimum(d2, np.sum((data - data[chosen[-1]]) ** 2, axis=1))
    return data[chosen].copy()


def fit_gmm(data: np.ndarray, k: int, cfg: EmConfig | None = None) -> GmmModel:
    """Fit a k-component diagonal GMM to pooled descriptor rows.

    Stops at max_iters or when the relative log-likelihood improvement
    falls below ll_rel_tol.  Components that lose all responsibility
    mass are re-seeded from the point with the poorest coverage.
    """
    cfg = cfg or EmConfig()
    cfg.validate()
    data = _check_data(data)
    n, d = data.shape
    if k < 1:
        raise TagforgeError("k must be >= 1")
    if n < k:
        raise TagforgeError(
            f"fewer descriptors than components ({n} rows, k={k})"
        )

    data_var = data.var(axis=0)
    floor = np.maximum(cfg.variance_floor_scale * data_var, 1e-12)
    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "kmeans_pp":
        means = _kmeans_pp_means(data, k, rng)
    else:
        means = data[rng.choice(n, size=k, replace=False)].copy()
    variances = np.tile(np.maximum(data_var, floor), (k, 1))
    weights = np.full(k, 1.0 / k)
    gmm = GmmModel(weights, means, variances)

    diags = EmDiagnostics()
    prev_ll = None
    for it in range(cfg.max_iters):
        logp = _log_joint(gmm, data)
        row_ll = _logsumexp_rows(logp)
        ll = float(row_ll.sum())
        diags.ll_history.append(ll)
        diags.iterations = it + 1
        if prev_ll is not None:
            improvement = ll - prev_ll
            if improvement < cfg.ll_rel_tol * abs(prev_ll):
                diags.converged = True
                break
        prev_ll = ll

        gamma = np.exp(logp - row_ll[:, None])
        mass = gamma.sum(axis=0)
        empty = np.flatnonzero(mass < 1e-10)
        if empty.size:
            coverage = gamma.max(axis=1)
            for comp in empty:
                worst = int(np.argmin(coverage))
                gmm.means[comp] = data[worst]
                gmm.variances[comp] = np.maximum(data_var, floor)
                gmm.weights[comp] = 1.0 / n
                coverage[worst] = np.inf
                diags.reseeded_components += 1
            gmm.weights /= gmm.weights.sum()
            prev_ll = None  # re-seeding may lower the likelihood
            continue

        gmm.weights = mass / n
        gmm.means = (gamma.T @ data) / mass[:, None]
        second = (gamma.T @ (data * data)) / mass[:, None]
        gmm.variances = np.maximum(second - gmm.means**2, floor)

    gmm.diagnostics = diags
    return gmm


def save_gmm(gmm: GmmModel, path: str | Path) -> None:
    doc = {
        "version": GMM_FORMAT_VERSION,
        "k": gmm.k,
        "d": gmm.d,
        "weights": gmm.weights.tolist(),
        "means": gmm.means.tolist(),
        "variances": gmm.variances.tolist(),
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_gmm(path: str | Path) -> GmmModel:
    path = Path(path)
    if not path.exists():
        raise TagforgeError(f"GMM model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        weights = np.asarray(doc["weights"], dtype=np.float64)
        means = np.asarray(doc["means"], dtype=np.float64)
        variances = np.asarray(doc["variances"], dtype=np.float64)
        k, d = int(doc["k"]), int(doc["d"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise TagforgeError(f"{path}: malformed GMM model file") from None
    if means.shape != (k, d) or variances.shape != (k, d) or weights.shape != (k,):
        raise DimensionMismatchError(f"{path}: parameter shapes disagree with k/d")
    return GmmModel(weights, means, variances)
