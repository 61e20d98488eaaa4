"""Dimensionality reduction before clustering.

High-dimensional neighborhoods become fuzzy affinities p_ij = exp(-d^2/sigma_i)
with sigma_i calibrated per point; a low-dimensional layout is fit by full-batch
gradient descent on the cross-entropy between p and the Cauchy-kernel q.
Deterministic for a fixed seed; no negative sampling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

EPS = 1e-7  # probability clip bound for the logs in the loss


class ReduceError(ValueError):
    """Invalid reduction inputs."""


@dataclass(frozen=True)
class ReduceConfig:
    n_neighbors: int = 15
    target_dim: int = 10
    a: float = 1.0
    b: float = 1.0
    epochs: int = 200
    learning_rate: float = 1.0
    seed: int = 0
    sigma_target: float | None = None  # defaults to log2(n_neighbors)

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ReduceError("n_neighbors must be >= 2")
        if self.epochs < 1:
            raise ReduceError("epochs must be >= 1")
        if self.a <= 0 or self.b <= 0:
            raise ReduceError("kernel parameters a, b must be positive")

    @property
    def effective_sigma_target(self) -> float:
        return self.sigma_target if self.sigma_target is not None else math.log2(self.n_neighbors)


@dataclass(frozen=True)
class AffinityMatrix:
    p: np.ndarray  # N x N symmetric, zero diagonal
    sigmas: np.ndarray  # length N
    neighbor_lists: list[np.ndarray]


@dataclass(frozen=True)
class LowDimEmbedding:
    y: np.ndarray  # N x d
    a: float
    b: float


def raw_affinity(sq_dist: float, sigma: float) -> float:
    """Directed affinity exp(-d^2 / sigma) before symmetrization."""
    return math.exp(-sq_dist / sigma)


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def high_dim_affinities(points: np.ndarray, cfg: ReduceConfig) -> AffinityMatrix:
    """Per-point calibrated affinities, symmetrized with p + pT - p*pT.

    sigma_i is found by binary search so the affinity mass over the neighbor
    list hits the calibration target (within 1e-4, at most 64 bisections).
    Exact duplicates contribute affinity 1 regardless of sigma; an all-duplicate
    neighborhood is degenerate and handled with a warning.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 3:
        raise ReduceError("need at least 3 points")
    k = min(cfg.n_neighbors, n - 1)
    target = cfg.effective_sigma_target
    d2 = _pairwise_sq_dists(points)

    p = np.zeros((n, n), dtype=np.float64)
    sigmas = np.empty(n, dtype=np.float64)
    neighbor_lists: list[np.ndarray] = []
    for i in range(n):
        order = np.argsort(d2[i], kind="stable")
        neighbors = order[order != i][:k]
        neighbor_lists.append(neighbors)
        dn = d2[i, neighbors]
        if float(dn.max()) == 0.0:
            warnings.warn(
                f"point {i} has an all-duplicate neighborhood; affinities pinned to 1",
                RuntimeWarning,
            )
            sigmas[i] = 1.0
            p[i, neighbors] = 1.0
            continue

        def mass(sigma: float) -> float:
            return float(np.exp(-dn / sigma).sum())

        lo, hi = 1e-20, 1.0
        while mass(hi) < target and hi < 1e20:
            hi *= 2.0
        sigma = hi
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            m = mass(mid)
            if abs(m - target) <= 1e-4:
                sigma = mid
                break
            if m > target:
                hi = mid
            else:
                lo = mid
            sigma = mid
        sigmas[i] = sigma
        p[i, neighbors] = [raw_affinity(float(d), sigma) for d in dn]

    p_sym = p + p.T - p * p.T
    np.fill_diagonal(p_sym, 0.0)
    return AffinityMatrix(p=p_sym, sigmas=sigmas, neighbor_lists=neighbor_lists)


def low_dim_kernel(yi: np.ndarray, yj: np.ndarray, a: float, b: float) -> float:
    """q = (1 + a * ||yi - yj||^(2b))^-1, in (0, 1]."""
    d2 = float(np.sum((np.asarray(yi, float) - np.asarray(yj, float)) ** 2))
    return 1.0 / (1.0 + a * d2**b)


def _kernel_matrix(y: np.ndarray, a: float, b: float) -> np.ndarray:
    d2 = _pairwise_sq_dists(y)
    with np.errstate(divide="ignore"):
        q = 1.0 / (1.0 + a * d2**b)
    np.fill_diagonal(q, 1.0)
    return q


def umap_loss(affinity: AffinityMatrix, emb: LowDimEmbedding) -> float:
    """Cross-entropy between p and q over ordered pairs i != j, clipped logs."""
    p = np.clip(affinity.p, EPS, 1.0 - EPS)
    q = np.clip(_kernel_matrix(emb.y, emb.a, emb.b), EPS, 1.0 - EPS)
    terms = p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    np.fill_diagonal(terms, 0.0)
    return float(terms.sum())


def umap_grad(affinity: AffinityMatrix, emb: LowDimEmbedding) -> np.ndarray:
    """Analytic gradient of umap_loss with respect to each embedding row.

    Pairs whose kernel value falls in the clipped region contribute zero, matching
    the (clipped) loss actually minimized.
    """
    y, a, b = emb.y, emb.a, emb.b
    n = y.shape[0]
    p = np.clip(affinity.p, EPS, 1.0 - EPS)
    d2 = _pairwise_sq_dists(y)
    with np.errstate(divide="ignore"):
        q = 1.0 / (1.0 + a * d2**b)
    inside = (q > EPS) & (q < 1.0 - EPS)
    qc = np.clip(q, EPS, 1.0 - EPS)
    dl_dq = -p / qc + (1.0 - p) / (1.0 - qc)
    with np.errstate(divide="ignore", invalid="ignore"):
        dq_dd2 = -a * b * np.where(d2 > 0, d2, 1.0) ** (b - 1.0) * q * q
    w = np.where(inside & (d2 > 0), dl_dq * dq_dd2, 0.0)
    np.fill_diagonal(w, 0.0)
    w = w + w.T  # ordered pairs (i,j) and (j,i) both touch y_i
    grad = 2.0 * (y * w.sum(axis=1)[:, None] - w @ y)
    return grad


def umap_fit(points: np.ndarray, cfg: ReduceConfig,
             init: np.ndarray | None = None,
             return_trace: bool = False):
    """Fit the low-dimensional layout by full-batch descent with step halving.

    A step that would increase the loss is halved and retried (up to 20 times),
    so the recorded loss trace is non-increasing. Identical inputs and seed give
    a bitwise-identical embedding.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < max(4, cfg.n_neighbors + 1):
        cfg = replace(cfg, n_neighbors=max(2, n - 1))
        if n < 4:
            raise ReduceError("need at least 4 points to fit")
    affinity = high_dim_affinities(points, cfg)
    if init is not None:
        y = np.asarray(init, dtype=np.float64).copy()
    else:
        rng = np.random.default_rng(cfg.seed)
        y = rng.uniform(-1.0, 1.0, size=(n, cfg.target_dim))
    emb = LowDimEmbedding(y=y, a=cfg.a, b=cfg.b)
    loss = umap_loss(affinity, emb)
    trace = [loss]
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate * (1.0 - epoch / cfg.epochs)
        grad = umap_grad(affinity, emb)
        # Scale by the largest per-point gradient norm so learning_rate is in
        # embedding units; the raw cross-entropy gradient spans many orders of
        # magnitude and would otherwise stall the backtracking line search.
        grad_scale = float(np.sqrt((grad * grad).sum(axis=1)).max())
        step = lr / max(grad_scale, 1e-12)
        for _ in range(20):
            candidate = LowDimEmbedding(y=emb.y - step * grad, a=cfg.a, b=cfg.b)
            cand_loss = umap_loss(affinity, candidate)
            if cand_loss <= loss:
                emb, loss = candidate, cand_loss
                break
            step *= 0.5
        trace.append(loss)
    if return_trace:
        return emb, trace
    return emb


class UmapReducer(BaseEstimator):
    """Estimator-style wrapper over umap_fit (fit_transform only; no out-of-sample)."""

    def __init__(self, n_neighbors: int = 15, target_dim: int = 10, a: float = 1.0,
                 b: float = 1.0, epochs: int = 200, learning_rate: float = 1.0,
                 seed: int = 0):
        self.n_neighbors = n_neighbors
        self.target_dim = target_dim
        self.a = a
        self.b = b
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def _config(self) -> ReduceConfig:
        return ReduceConfig(
            n_neighbors=self.n_neighbors, target_dim=self.target_dim, a=self.a,
            b=self.b, epochs=self.epochs, learning_rate=self.learning_rate,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        self.embedding_ = umap_fit(np.asarray(X, dtype=np.float64), self._config()).y
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
