import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftgmm.gmm import (Gaussian, GmmModel, aic, density, fit_em, log_likelihood, sample_covariance,
                          select_k_and_fit, train_initial, training_reach)
from conftest import brute_density, random_spd, two_blobs


def g1(mu, var=1.0, w=1.0, label=0, sp=1.0):
    return Gaussian(np.array([mu], float), np.array([[var]]), w, sp, label)


class TestDensity:
    def test_standard_normal_1d(self):
        assert density(g1(0.0), [0.0]) == pytest.approx(0.398942, abs=1e-6)

    def test_standard_normal_2d(self):
        g = Gaussian(np.zeros(2), np.eye(2))
        assert density(g, [0, 0]) == pytest.approx(0.159155, abs=1e-6)
        assert density(g, [1, 0]) == pytest.approx(0.159155 * math.exp(-0.5), abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            density(Gaussian(np.zeros(2), np.eye(2)), [0.0])

    def test_matches_quadratic_form(self, rng):
        for _ in range(200):
            d = int(rng.integers(1, 5))
            cov = random_spd(rng, d)
            mu = rng.normal(size=d)
            x = mu + rng.normal(size=d)
            got = density(Gaussian(mu, cov), x)
            assert got == pytest.approx(brute_density(mu, cov, x), rel=1e-9)


class TestPosteriorPredict:
    def test_single_gaussian(self):
        m = GmmModel([g1(0.0)])
        assert m.posterior([3.0]) == pytest.approx([1.0])

    def test_symmetry(self):
        m = GmmModel([g1(-1.0, w=.5), g1(1.0, w=.5, label=1)])
        assert m.posterior([0.0]) == pytest.approx([0.5, 0.5])

    def test_hand_evaluated(self):
        m = GmmModel([g1(0.0, w=.5), g1(2.0, w=.5, label=1)])
        p = m.posterior([0.0])
        assert p == pytest.approx([1 / (1 + math.exp(-2)), math.exp(-2) / (1 + math.exp(-2))], abs=1e-9)
        assert p[0] == pytest.approx(0.8808, abs=1e-4)

    def test_underflow_gives_uniform(self):
        m = GmmModel([g1(0.0, var=1e-4), g1(1.0, var=1e-4, label=1)])
        assert m.posterior([1e6]) == pytest.approx([0.5, 0.5])

    def test_predict_basic(self):
        assert GmmModel([g1(0.0, label=1)]).predict([100.0]) == 1
        m = GmmModel([g1(0.0, w=.5), g1(10.0, w=.5, label=1)])
        assert m.predict([0.1]) == 0

    def test_tie_goes_to_lowest_index(self):
        gs = [g1(0.0, label=2), g1(5.0, label=1), g1(-5.0, label=1), g1(0.0, label=0)]
        m = GmmModel(gs)
        assert m.predict([0.0]) == 2
        assert m.predict_many([[0.0]])[0] == 2

    def test_predict_many_agrees(self, rng):
        X, y = two_blobs(rng)
        m = train_initial(X, y, seed=0)
        assert np.array_equal(m.predict_many(X), [m.predict(x) for x in X])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 5), st.floats(0.01, 100.0))
    def test_posterior_sums_to_one_and_scale_invariant(self, seed, d, k, scale):
        r = np.random.default_rng(seed)
        gs = [Gaussian(r.normal(size=d), random_spd(r, d, 0.3), float(r.uniform(0.1, 1)), 1.0, int(r.integers(0, 3)))
              for _ in range(k)]
        m = GmmModel(gs)
        x = r.normal(size=d) * 2
        p = m.posterior(x)
        assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-9
        assert abs(m.weights.sum() - 1) < 1e-9
        scaled = GmmModel([Gaussian(g.mean, g.covariance, g.weight * scale, g.sp, g.label) for g in gs])
        assert scaled.predict(x) == m.predict(x)


class TestLikelihood:
    def test_values(self):
        m = GmmModel([g1(0.0)])
        assert log_likelihood(m, [[0.0]]) == pytest.approx(-0.918939, abs=1e-6)
        assert log_likelihood(m, [[0.0], [0.0]]) == pytest.approx(-1.837877, abs=1e-6)
        mix = GmmModel([g1(0.0, w=.5), g1(2.0, w=.5, label=1)])
        expected = math.log(0.5 * 0.3989422804 + 0.5 * 0.3989422804 * math.exp(-2))
        assert log_likelihood(mix, [[0.0]]) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(-1.48516, abs=1e-5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            log_likelihood(GmmModel([g1(0.0)]), np.empty((0, 1)))

    def test_clamped_instead_of_minus_inf(self):
        m = GmmModel([g1(0.0, var=1e-3)])
        assert math.isfinite(log_likelihood(m, [[1e5]]))


class TestEm:
    def test_k1_closed_form(self, rng):
        X = rng.normal(size=(50, 2)) @ np.array([[1, .3], [0, .5]])
        mix = fit_em(X, 1, iterations=5, seed=3)
        assert np.allclose(mix.means[0], X.mean(axis=0))
        assert np.allclose(mix.covariances[0], sample_covariance(X))
        assert mix.weights[0] == pytest.approx(1.0)

    def test_two_clusters(self, rng):
        X = np.r_[rng.normal(0, 0.1, 100), rng.normal(10, 0.1, 100)][:, None]
        mix = fit_em(X, 2, iterations=20, seed=1)
        order = np.argsort(mix.means[:, 0])
        assert mix.means[order[0], 0] == pytest.approx(0, abs=0.2)
        assert mix.means[order[1], 0] == pytest.approx(10, abs=0.2)
        assert np.allclose(mix.weights, 0.5, atol=0.05)

    def test_zero_iterations_is_initialization(self, rng):
        X = rng.normal(size=(30, 2))
        mix = fit_em(X, 2, iterations=0, seed=7)
        assert len(mix.history) == 1
        # each mean is one of the data points
        assert all(np.any(np.all(np.isclose(X, mu), axis=1)) for mu in mix.means)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
    def test_monotone(self, seed, d, k):
        r = np.random.default_rng(seed)
        X = np.vstack([r.normal(r.uniform(-3, 3, d), 1.0, size=(40, d)) for _ in range(2)])
        mix = fit_em(X, k, iterations=15, seed=seed)
        assert np.all(np.diff(mix.history) >= -1e-6)


class TestSelection:
    def test_aic_arithmetic(self):
        assert aic(-0.918939, 1) == pytest.approx(7.837878, abs=1e-6)

    def test_tight_cluster_picks_one(self):
        X = np.random.default_rng(0).normal(0, 0.05, size=(60, 1))
        mix = select_k_and_fit(X, kmax=2, seed=0)
        assert mix.k == 1

    def test_selection_matches_aic_oracle(self, rng):
        for seed in range(10):
            X = np.random.default_rng(seed).normal(0, 1, size=(60, 2))
            picked = select_k_and_fit(X, kmax=3, seed=seed)
            r = np.random.default_rng(seed)
            scores = [aic(fit_em(X, k, rng=r).log_likelihood, k) for k in (1, 2, 3)]
            assert picked.k == int(np.argmin(scores)) + 1

    def test_kmax_one_equals_em(self, rng):
        X = rng.normal(size=(40, 2))
        a = select_k_and_fit(X, kmax=1, seed=5)
        b = fit_em(X, 1, seed=5)
        assert np.allclose(a.means, b.means) and np.allclose(a.covariances, b.covariances)

    def test_k_capped_by_sample_size(self, rng):
        X = rng.normal(size=(6, 2))
        assert select_k_and_fit(X, kmax=4, seed=0).k <= 2


class TestTrainInitial:
    def test_cfc(self, rng):
        X = rng.uniform(0, 10, size=(40, 2))
        X[0] = [0, 0]
        X[1] = [10, 10]
        y = np.arange(40) % 2
        assert train_initial(X, y, radius_divisor=20).cfc == pytest.approx(0.5)

    def test_separable_accuracy_and_weights(self, rng):
        X, y = two_blobs(rng)
        m = train_initial(X, y, seed=1)
        assert np.mean(m.predict_many(X) == y) >= 0.95
        assert abs(m.weights.sum() - 1) < 1e-9
        assert m.sp.sum() == pytest.approx(len(y))

    def test_theta_is_min_same_class_density(self, rng):
        X, y = two_blobs(rng, n=40)
        m = train_initial(X, y, seed=2)
        brute = min(max(brute_density(g.mean, g.covariance, x) for g in m.gaussians if g.label == c)
                    for x, c in zip(X, y))
        assert m.theta == pytest.approx(brute, rel=1e-9)
        assert training_reach(m, X, y) == pytest.approx(brute, rel=1e-9)

    def test_tiny_class_gets_isotropic_gaussian(self, rng):
        X = np.r_[rng.normal(size=(20, 2)), [[5.0, 5.0]]]
        y = np.r_[np.zeros(20, int), [1]]
        m = train_initial(X, y, seed=0)
        g = [g for g in m.gaussians if g.label == 1]
        assert len(g) == 1
        assert np.allclose(g[0].mean, [5, 5]) and np.allclose(g[0].covariance, m.cfc * np.eye(2))

    def test_covariance_floor(self):
        X = np.r_[np.zeros((10, 2)), np.ones((10, 2))]
        y = np.r_[np.zeros(10, int), np.ones(10, int)]
        m = train_initial(X, y)
        for cov in m.covs:
            assert np.linalg.eigvalsh(cov).min() >= m.eps_cov * (1 - 1e-9)
