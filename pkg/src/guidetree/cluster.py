"""Soft clustering with diagonal-covariance Gaussian mixtures.

EM fitting with k-means++-style seeding and restarts, BIC model selection,
and threshold-based overlapping assignment. Diagonal covariance keeps small
clusters well-conditioned; a variance floor guards duplicate points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator

VARIANCE_FLOOR = 1e-6


class ClusterError(ValueError):
    """Invalid clustering inputs."""


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 200
    tol: float = 1e-6
    n_init: int = 4
    seed: int = 0
    membership_threshold: float = 0.1
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self):
        if not 0 < self.membership_threshold < 1:
            raise ClusterError("membership_threshold must be in (0, 1)")


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray  # K, sums to 1
    means: np.ndarray  # K x d
    variances: np.ndarray  # K x d, >= floor
    log_likelihood: float
    ll_trace: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_params(self) -> int:
        # (K-1) free weights + K*d means + K*d diagonal variances
        k, d = self.means.shape
        return (k - 1) + 2 * k * d


@dataclass(frozen=True)
class SoftAssignment:
    responsibilities: np.ndarray  # N x K, rows on the simplex
    memberships: list[list[int]]  # per point; always contains the argmax


def _log_component_densities(x: np.ndarray, model: GmmModel) -> np.ndarray:
    """log pi_k + log N(x | mu_k, diag(var_k)) for each row of x, shape N x K."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    diff2 = (x[:, None, :] - model.means[None, :, :]) ** 2
    log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * model.variances), axis=1)
    log_pdf = log_norm[None, :] - 0.5 * np.sum(diff2 / model.variances[None, :, :], axis=2)
    return np.log(model.weights)[None, :] + log_pdf


def gmm_density(x: np.ndarray, model: GmmModel) -> float:
    """Mixture density sum_k pi_k N(x | mu_k, var_k), via log-sum-exp."""
    return float(np.exp(logsumexp(_log_component_densities(x, model), axis=1))[0])


def responsibilities(x: np.ndarray, model: GmmModel) -> np.ndarray:
    """Posterior component probabilities for one point; sums to 1."""
    log_joint = _log_component_densities(x, model)
    return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))[0]


def _kmeanspp_means(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    means = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((points - m) ** 2, axis=1) for m in means], axis=0
        )
        total = float(d2.sum())
        if total == 0.0:
            means.append(points[rng.integers(n)])
            continue
        means.append(points[rng.choice(n, p=d2 / total)])
    return np.array(means)


def _em_single(points: np.ndarray, k: int, cfg: EmConfig,
               rng: np.random.Generator) -> GmmModel:
    n, d = points.shape
    means = _kmeanspp_means(points, k, rng)
    base_var = np.maximum(points.var(axis=0), cfg.variance_floor)
    variances = np.tile(base_var, (k, 1))
    weights = np.full(k, 1.0 / k)
    model = GmmModel(weights, means, variances, -np.inf)

    trace: list[float] = []
    prev_ll = -np.inf
    for _ in range(cfg.max_iters):
        log_joint = _log_component_densities(points, model)
        log_evidence = logsumexp(log_joint, axis=1)
        ll = float(log_evidence.sum())
        trace.append(ll)
        resp = np.exp(log_joint - log_evidence[:, None])

        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp.T @ points) / nk[:, None]
        second = (resp.T @ (points * points)) / nk[:, None]
        variances = np.maximum(second - means**2, cfg.variance_floor)
        model = GmmModel(weights, means, variances, ll)

        if prev_ll > -np.inf and abs(ll - prev_ll) <= cfg.tol * max(1.0, abs(prev_ll)):
            break
        prev_ll = ll

    final_ll = float(logsumexp(_log_component_densities(points, model), axis=1).sum())
    trace.append(final_ll)
    return replace(model, log_likelihood=final_ll, ll_trace=tuple(trace))


def em_fit(points: np.ndarray, k: int, cfg: EmConfig = EmConfig()) -> GmmModel:
    """Best-of-n_init EM fit; deterministic for a fixed seed.

    The per-iteration log-likelihood trace of the returned model is
    non-decreasing (EM monotonicity, up to the variance floor).
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    if k < 1 or k > n:
        raise ClusterError(f"K={k} out of range for N={n}")
    if not np.all(np.isfinite(points)):
        raise ClusterError("non-finite input points")
    best: GmmModel | None = None
    for restart in range(cfg.n_init):
        rng = np.random.default_rng((cfg.seed & 0x7FFFFFFFFFFFFFFF, restart))
        candidate = _em_single(points, k, cfg, rng)
        if best is None or candidate.log_likelihood > best.log_likelihood:
            best = candidate
    return best


def bic(model: GmmModel, n: int) -> float:
    """ln(N) * n_params - 2 * ln(L-hat); lower is better."""
    if n < 1:
        raise ClusterError("N must be >= 1")
    return math.log(n) * model.n_params - 2.0 * model.log_likelihood


def select_k(points: np.ndarray, k_min: int, k_max: int,
             cfg: EmConfig = EmConfig()) -> GmmModel:
    """Fit every K in [k_min, k_max], return the minimal-BIC model (ties: smaller K)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    if not 1 <= k_min <= k_max <= n:
        raise ClusterError(f"invalid K range [{k_min}, {k_max}] for N={n}")
    best = None
    best_bic = math.inf
    for k in range(k_min, k_max + 1):
        model = em_fit(points, k, cfg)
        score = bic(model, n)
        if score < best_bic:
            best, best_bic = model, score
    return best


def soft_assign(points: np.ndarray, model: GmmModel,
                threshold: float = 0.1) -> SoftAssignment:
    """Overlapping memberships: components above threshold, argmax always kept."""
    if not 0 < threshold < 1:
        raise ClusterError("threshold must be in (0, 1)")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    log_joint = _log_component_densities(points, model)
    resp = np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))
    memberships = []
    for row in resp:
        members = set(np.flatnonzero(row > threshold).tolist())
        members.add(int(np.argmax(row)))
        memberships.append(sorted(members))
    return SoftAssignment(responsibilities=resp, memberships=memberships)


class DiagonalGaussianMixture(BaseEstimator):
    """Estimator-style wrapper: fit/predict_proba/bic over the EM routines."""

    def __init__(self, n_components: int = 1, max_iters: int = 200, tol: float = 1e-6,
                 n_init: int = 4, seed: int = 0, membership_threshold: float = 0.1):
        self.n_components = n_components
        self.max_iters = max_iters
        self.tol = tol
        self.n_init = n_init
        self.seed = seed
        self.membership_threshold = membership_threshold

    def _config(self) -> EmConfig:
        return EmConfig(max_iters=self.max_iters, tol=self.tol, n_init=self.n_init,
                        seed=self.seed, membership_threshold=self.membership_threshold)

    def fit(self, X, y=None):
        self.model_ = em_fit(np.asarray(X, dtype=np.float64), self.n_components,
                             self._config())
        return self

    def predict_proba(self, X):
        return soft_assign(X, self.model_, self.membership_threshold).responsibilities

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def bic(self, X):
        return bic(self.model_, np.atleast_2d(X).shape[0])
