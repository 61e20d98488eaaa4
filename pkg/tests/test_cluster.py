"""Tests for the diagonal-covariance GMM: density, EM, BIC, soft assignment."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guidetree.cluster import (
    ClusterError,
    DiagonalGaussianMixture,
    EmConfig,
    GmmModel,
    bic,
    em_fit,
    gmm_density,
    responsibilities,
    select_k,
    soft_assign,
)


def reference_density(x, weights, means, variances):
    """Independent mixture density: sum of products of 1-d normal pdfs."""
    total = 0.0
    for w, mu, var in zip(weights, means, variances):
        comp = 1.0
        for xj, mj, vj in zip(x, mu, var):
            comp *= math.exp(-((xj - mj) ** 2) / (2.0 * vj)) / math.sqrt(2.0 * math.pi * vj)
        total += w * comp
    return total


def random_model(rng, k, d):
    w = rng.dirichlet(np.ones(k))
    means = rng.normal(size=(k, d))
    variances = rng.uniform(0.2, 2.0, size=(k, d))
    return GmmModel(weights=w, means=means, variances=variances, log_likelihood=0.0)


class TestDensity:
    def test_matches_reference_formula(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            k = int(rng.integers(1, 5))
            d = int(rng.integers(1, 6))
            model = random_model(rng, k, d)
            x = rng.normal(size=d)
            expected = reference_density(x, model.weights, model.means, model.variances)
            assert gmm_density(x, model) == pytest.approx(expected, rel=1e-10)

    def test_single_standard_normal_at_origin(self):
        model = GmmModel(
            weights=np.array([1.0]),
            means=np.zeros((1, 1)),
            variances=np.ones((1, 1)),
            log_likelihood=0.0,
        )
        assert gmm_density(np.array([0.0]), model) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi), rel=1e-12
        )

    def test_responsibilities_simplex_and_bayes(self):
        rng = np.random.default_rng(7)
        model = random_model(rng, 3, 2)
        x = rng.normal(size=2)
        r = responsibilities(x, model)
        assert r.shape == (3,)
        assert r.sum() == pytest.approx(1.0, abs=1e-12)
        joint = np.array([
            w * reference_density(x, [1.0], [m], [v])
            for w, m, v in zip(model.weights, model.means, model.variances)
        ])
        assert np.allclose(r, joint / joint.sum(), rtol=1e-10)


class TestEm:
    def test_k1_closed_form(self):
        # With one component EM converges in one step to the sample mean and
        # biased sample variance; the log-likelihood has a closed form.
        rng = np.random.default_rng(3)
        x = rng.normal(loc=2.0, scale=1.5, size=(40, 3))
        model = em_fit(x, 1)
        mu = x.mean(axis=0)
        var = np.maximum(x.var(axis=0), 1e-6)
        assert np.allclose(model.means[0], mu, atol=1e-12)
        assert np.allclose(model.variances[0], var, atol=1e-12)
        expected_ll = float(
            np.sum(
                -0.5 * np.log(2.0 * np.pi * var)
                - (x - mu) ** 2 / (2.0 * var)
            )
        )
        assert model.log_likelihood == pytest.approx(expected_ll, abs=1e-9)

    def test_ll_trace_monotone(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            pts = rng.normal(size=(50, 4)) + rng.integers(0, 3, size=(50, 1)) * 4.0
            model = em_fit(pts, int(rng.integers(1, 5)), EmConfig(seed=trial))
            trace = np.array(model.ll_trace)
            assert np.all(np.diff(trace) >= -1e-8)

    def test_recovers_separated_blobs(self):
        rng = np.random.default_rng(5)
        a = rng.normal(loc=0.0, size=(60, 2))
        b = rng.normal(loc=10.0, size=(60, 2))
        model = em_fit(np.concatenate([a, b]), 2, EmConfig(seed=1))
        centers = sorted(model.means[:, 0].tolist())
        assert centers[0] == pytest.approx(0.0, abs=0.5)
        assert centers[1] == pytest.approx(10.0, abs=0.5)
        assert np.allclose(sorted(model.weights), [0.5, 0.5], atol=0.05)

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(30, 3))
        m1 = em_fit(pts, 3, EmConfig(seed=42))
        m2 = em_fit(pts, 3, EmConfig(seed=42))
        assert np.array_equal(m1.means, m2.means)
        assert m1.log_likelihood == m2.log_likelihood

    def test_duplicate_points_hit_variance_floor(self):
        pts = np.zeros((10, 2))
        model = em_fit(pts, 1)
        assert np.all(model.variances >= 1e-6)
        assert np.isfinite(model.log_likelihood)

    def test_k_out_of_range(self):
        pts = np.zeros((3, 2))
        with pytest.raises(ClusterError):
            em_fit(pts, 0)
        with pytest.raises(ClusterError):
            em_fit(pts, 4)

    def test_non_finite_rejected(self):
        pts = np.array([[0.0, np.nan], [1.0, 2.0], [3.0, 4.0]])
        with pytest.raises(ClusterError):
            em_fit(pts, 1)


class TestBic:
    def test_hand_value(self):
        # n_params = (K-1) + 2*K*d = 10 for K=1, d=5; with N=100 and
        # log-likelihood -250: ln(100)*10 + 500 = 546.0517...
        model = GmmModel(
            weights=np.array([1.0]),
            means=np.zeros((1, 5)),
            variances=np.ones((1, 5)),
            log_likelihood=-250.0,
        )
        assert model.n_params == 10
        assert bic(model, 100) == pytest.approx(546.0517, abs=1e-3)

    def test_param_count(self):
        rng = np.random.default_rng(1)
        model = random_model(rng, 4, 3)
        assert model.n_params == 3 + 2 * 4 * 3

    def test_select_k_recovers_true_k(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            true_k = int(rng.integers(2, 5))
            centers = rng.uniform(-1, 1, size=(true_k, 3))
            centers *= 30.0 / max(1e-9, np.linalg.norm(centers, axis=1).min())
            pts = np.concatenate(
                [c + rng.normal(scale=0.5, size=(40, 3)) for c in centers]
            )
            model = select_k(pts, 1, 6, EmConfig(seed=trial))
            assert model.n_components == true_k

    def test_select_k_range_validation(self):
        pts = np.zeros((5, 2))
        with pytest.raises(ClusterError):
            select_k(pts, 3, 2)
        with pytest.raises(ClusterError):
            select_k(pts, 1, 6)


class TestSoftAssign:
    def test_argmax_always_member(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(25, 2))
        model = em_fit(pts, 3, EmConfig(seed=0))
        assignment = soft_assign(pts, model, threshold=0.9)
        for row, members in zip(assignment.responsibilities, assignment.memberships):
            assert int(np.argmax(row)) in members

    def test_rows_on_simplex(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(20, 3))
        model = em_fit(pts, 2, EmConfig(seed=0))
        assignment = soft_assign(pts, model)
        assert np.allclose(assignment.responsibilities.sum(axis=1), 1.0, atol=1e-12)

    def test_overlap_between_close_clusters(self):
        # A point midway between two components should belong to both.
        model = GmmModel(
            weights=np.array([0.5, 0.5]),
            means=np.array([[-1.0], [1.0]]),
            variances=np.ones((2, 1)),
            log_likelihood=0.0,
        )
        assignment = soft_assign(np.array([[0.0]]), model, threshold=0.3)
        assert assignment.memberships[0] == [0, 1]

    def test_threshold_validation(self):
        model = GmmModel(
            weights=np.array([1.0]), means=np.zeros((1, 1)),
            variances=np.ones((1, 1)), log_likelihood=0.0,
        )
        with pytest.raises(ClusterError):
            soft_assign(np.zeros((1, 1)), model, threshold=0.0)


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=15, deadline=None)
def test_responsibilities_simplex_property(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
    x = rng.normal(scale=3.0, size=model.dim)
    r = responsibilities(x, model)
    assert np.all(r >= 0)
    assert r.sum() == pytest.approx(1.0, abs=1e-9)


class TestEstimator:
    def test_sklearn_params_roundtrip(self):
        est = DiagonalGaussianMixture(n_components=3, seed=5)
        params = est.get_params()
        assert params["n_components"] == 3
        clone = DiagonalGaussianMixture(**params)
        assert clone.get_params() == params

    def test_fit_predict(self):
        rng = np.random.default_rng(8)
        pts = np.concatenate([
            rng.normal(loc=0.0, size=(30, 2)),
            rng.normal(loc=8.0, size=(30, 2)),
        ])
        est = DiagonalGaussianMixture(n_components=2, seed=0).fit(pts)
        labels = est.predict(pts)
        assert len(set(labels[:30])) == 1
        assert len(set(labels[30:])) == 1
        assert labels[0] != labels[-1]
        assert np.isfinite(est.bic(pts))
