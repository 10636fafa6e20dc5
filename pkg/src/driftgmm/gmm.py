"""Gaussian mixture classifier: densities, posteriors, EM fitting and AIC selection.

A :class:`GmmModel` keeps its components in stacked arrays so that the
per-observation path (posterior, prediction, pertinence) is a handful of
vectorized numpy calls. :class:`Gaussian` is the value type used at the
boundaries (construction, inspection, tests).
"""
from __future__ import annotations

import copy
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
_LOG_TINY = math.log(np.finfo(float).tiny)
_TINY = np.finfo(float).tiny


class NumericError(ArithmeticError):
    """Raised when a density cannot be evaluated to a finite number."""


@dataclass
class Gaussian:
    """One mixture component."""

    mean: np.ndarray
    covariance: np.ndarray
    weight: float = 1.0
    sp: float = 1.0
    label: int = 0

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise ValueError(f"covariance shape {self.covariance.shape} does not match mean dim {d}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass
class Mixture:
    """Unlabeled mixture returned by EM (one class at a time)."""

    means: np.ndarray  # (k, d)
    covariances: np.ndarray  # (k, d, d)
    weights: np.ndarray  # (k,)
    log_likelihood: float = float("nan")
    history: Optional[list] = None
    reseeds: int = 0

    @property
    def k(self) -> int:
        return self.weights.shape[0]


def floor_covariance(cov: np.ndarray, eps: float) -> np.ndarray:
    """Symmetrize and raise every eigenvalue to at least ``eps``."""
    cov = 0.5 * (cov + cov.T)
    if cov.shape[0] == 1:
        return np.maximum(cov, eps)
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] >= eps:
        return cov
    vals = np.maximum(vals, eps)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T)


def _floor_and_factor(cov: np.ndarray, eps: float):
    """Floored covariance, its inverse and log normalizer from one eigendecomposition."""
    d = cov.shape[0]
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] < eps:
        vals = np.maximum(vals, eps)
        cov = (vecs * vals) @ vecs.T
        cov = 0.5 * (cov + cov.T)
    prec = (vecs / vals) @ vecs.T
    lognorm = -0.5 * (d * LOG_2PI + float(np.sum(np.log(vals))))
    return cov, prec, lognorm


def _precision_and_lognorm(cov: np.ndarray):
    """Inverse covariance and ``-0.5*(d*log(2pi) + log|cov|)``."""
    d = cov.shape[0]
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        raise NumericError("covariance is not positive definite")
    return np.linalg.inv(cov), -0.5 * (d * LOG_2PI + logdet)


def log_density(g: Gaussian, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != g.dim:
        raise ValueError(f"feature dim {x.shape[0]} != gaussian dim {g.dim}")
    prec, lognorm = _precision_and_lognorm(g.covariance)
    diff = x - g.mean
    return float(lognorm - 0.5 * diff @ prec @ diff)


def density(g: Gaussian, x) -> float:
    """Multivariate normal density of ``x`` under ``g``."""
    value = math.exp(log_density(g, x))
    if not math.isfinite(value):
        raise NumericError("density overflowed")
    return value


def _batch_log_pdf(X: np.ndarray, means: np.ndarray, precs: np.ndarray, lognorms: np.ndarray) -> np.ndarray:
    """Log densities, shape (n, k), of rows of X under k components."""
    diff = X[:, None, :] - means[None, :, :]
    maha = np.einsum("nki,kij,nkj->nk", diff, precs, diff)
    return lognorms[None, :] - 0.5 * maha


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


class GmmModel:
    """Multi-class Gaussian mixture classifier.

    Components are stored as stacked arrays; ``gaussians`` materializes them
    as :class:`Gaussian` values. ``theta`` is the reach threshold (lowest
    same-class pertinence seen in training) and ``cfc`` the isotropic
    covariance scale used for newly created components.
    """

    def __init__(self, gaussians: Sequence[Gaussian], theta: float = 0.0, cfc: float = 1.0,
                 eps_cov: Optional[float] = None, classes=None):
        if cfc <= 0:
            raise ValueError("cfc must be positive")
        if theta < 0:
            raise ValueError("theta must be non-negative")
        gaussians = list(gaussians)
        if not gaussians:
            raise ValueError("a model needs at least one gaussian")
        self.dim = gaussians[0].dim
        self.theta = float(theta)
        self.cfc = float(cfc)
        self.eps_cov = float(eps_cov) if eps_cov is not None else 1e-6 * self.cfc ** 2
        self.means = np.array([g.mean for g in gaussians], dtype=float)
        self.covs = np.array([floor_covariance(g.covariance, self.eps_cov) for g in gaussians])
        self.sp = np.array([g.sp for g in gaussians], dtype=float)
        self.weights = np.array([g.weight for g in gaussians], dtype=float)
        self.labels = np.array([g.label for g in gaussians], dtype=int)
        if self.means.shape[1:] != (self.dim,):
            raise ValueError("all gaussians must share one dimension")
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("weights must have positive sum")
        self.weights = self.weights / total
        self.classes = set(int(c) for c in (classes if classes is not None else self.labels))
        self.classes.update(int(c) for c in self.labels)
        self._precs = np.empty_like(self.covs)
        self._lognorms = np.empty(len(gaussians))
        self._memo = None
        for i in range(len(gaussians)):
            self._refresh(i)

    # -- bookkeeping -------------------------------------------------------
    def _refresh(self, i: int) -> None:
        self._precs[i], self._lognorms[i] = _precision_and_lognorm(self.covs[i])
        self._memo = None

    def __len__(self) -> int:
        return self.means.shape[0]

    @property
    def n_gaussians(self) -> int:
        return self.means.shape[0]

    @property
    def gaussians(self) -> list:
        return [Gaussian(self.means[i].copy(), self.covs[i].copy(), float(self.weights[i]),
                         float(self.sp[i]), int(self.labels[i])) for i in range(len(self))]

    def copy(self) -> "GmmModel":
        return copy.deepcopy(self)

    def set_covariance(self, i: int, cov: np.ndarray) -> None:
        self.covs[i], self._precs[i], self._lognorms[i] = _floor_and_factor(cov, self.eps_cov)
        self._memo = None

    def append(self, g: Gaussian) -> None:
        """Append a component; weights are left for the caller to renormalize."""
        cov = floor_covariance(g.covariance, self.eps_cov)
        prec, lognorm = _precision_and_lognorm(cov)
        self.means = np.vstack([self.means, g.mean[None, :]])
        self.covs = np.concatenate([self.covs, cov[None]], axis=0)
        self._precs = np.concatenate([self._precs, prec[None]], axis=0)
        self._lognorms = np.append(self._lognorms, lognorm)
        self.sp = np.append(self.sp, float(g.sp))
        self.weights = np.append(self.weights, float(g.weight))
        self.labels = np.append(self.labels, int(g.label))
        self.classes.add(int(g.label))
        self._memo = None

    def renormalize_from_sp(self) -> None:
        self.weights = self.sp / self.sp.sum()

    # -- evaluation --------------------------------------------------------
    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"feature dim {x.shape[0]} != model dim {self.dim}")
        return x

    def log_densities(self, x) -> np.ndarray:
        """Log density of ``x`` under every component (memoized for the last ``x``)."""
        x = self._check(x)
        memo = self._memo
        if memo is not None and np.array_equal(memo[0], x):
            return memo[1]
        diff = self.means - x
        maha = np.einsum("ki,kij,kj->k", diff, self._precs, diff)
        out = self._lognorms - 0.5 * maha
        self._memo = (x.copy(), out)
        return out

    def densities(self, x) -> np.ndarray:
        return np.exp(self.log_densities(x))

    def posterior(self, x) -> np.ndarray:
        """Posterior of every component given ``x``; uniform if all densities underflow."""
        logd = self.log_densities(x)
        if not np.any(logd >= _LOG_TINY):
            return np.full(len(self), 1.0 / len(self))
        with np.errstate(divide="ignore"):
            a = logd + np.log(self.weights)
        a = a - a.max()
        p = np.exp(a)
        return p / p.sum()

    def predict(self, x) -> int:
        # argmax returns the first maximum, which gives lowest-index tie-breaking
        return int(self.labels[int(np.argmax(self.posterior(x)))])

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        logd = _batch_log_pdf(X, self.means, self._precs, self._lognorms)
        with np.errstate(divide="ignore"):
            a = logd + np.log(self.weights)[None, :]
        underflow = ~np.any(logd >= _LOG_TINY, axis=1)
        idx = np.argmax(a, axis=1)
        idx[underflow] = 0
        return self.labels[idx]

    def gaussian_mixture(self) -> Mixture:
        return Mixture(self.means.copy(), self.covs.copy(), self.weights.copy())


def mixture_log_pdf(mix: Mixture, X: np.ndarray) -> np.ndarray:
    precs = np.empty_like(mix.covariances)
    lognorms = np.empty(mix.k)
    for j in range(mix.k):
        precs[j], lognorms[j] = _precision_and_lognorm(mix.covariances[j])
    return _batch_log_pdf(X, mix.means, precs, lognorms)


class LikelihoodStats:
    """Counts clamped samples in :func:`log_likelihood`."""

    clamped = 0


def log_likelihood(model, data) -> float:
    """Sum over samples of log(sum_j density_j(x) * w_j).

    ``model`` may be a :class:`GmmModel` or an unlabeled :class:`Mixture`.
    Samples whose mixture density underflows are clamped to the smallest
    positive float and counted in ``LikelihoodStats.clamped``.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("data must be non-empty")
    if isinstance(model, GmmModel):
        if X.shape[1] != model.dim:
            raise ValueError("dimension mismatch")
        logd = _batch_log_pdf(X, model.means, model._precs, model._lognorms)
        weights = model.weights
    else:
        if X.shape[1] != model.means.shape[1]:
            raise ValueError("dimension mismatch")
        logd = mixture_log_pdf(model, X)
        weights = model.weights
    with np.errstate(divide="ignore"):
        per_sample = _logsumexp_rows(logd + np.log(weights)[None, :])
    bad = ~(per_sample >= _LOG_TINY)
    if bad.any():
        LikelihoodStats.clamped += int(bad.sum())
        per_sample = np.where(bad, _LOG_TINY, per_sample)
    return float(per_sample.sum())


def sample_covariance(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    if X.shape[0] < 2:
        return np.zeros((X.shape[1], X.shape[1]))
    diff = X - X.mean(axis=0)
    return diff.T @ diff / X.shape[0]


def fit_em(data, k: int, iterations: int = 10, seed: int = 0, eps_cov: float = 1e-6,
           rng: Optional[np.random.Generator] = None) -> Mixture:
    """Fit a ``k``-component full-covariance mixture with EM.

    Components start at distinct random data points, each with the sample
    covariance of the whole data. A component whose responsibility mass drops
    below 1e-8 is re-seeded from a random data point. ``history`` holds the
    log-likelihood before the first and after every iteration.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, d = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    base_cov = floor_covariance(sample_covariance(X), eps_cov)
    means = X[rng.choice(n, size=k, replace=False)].copy()
    covs = np.repeat(base_cov[None], k, axis=0)
    weights = np.full(k, 1.0 / k)
    mix = Mixture(means, covs, weights)
    history = [log_likelihood(mix, X)]
    reseeds = 0
    for _ in range(iterations):
        logd = mixture_log_pdf(mix, X) + np.log(mix.weights)[None, :]
        resp = np.exp(logd - _logsumexp_rows(logd)[:, None])
        mass = resp.sum(axis=0)
        new_means = np.empty_like(mix.means)
        new_covs = np.empty_like(mix.covariances)
        for j in range(k):
            if mass[j] < 1e-8:
                reseeds += 1
                new_means[j] = X[rng.integers(n)]
                new_covs[j] = base_cov
                continue
            r = resp[:, j]
            mu = r @ X / mass[j]
            diff = X - mu
            new_means[j] = mu
            new_covs[j] = floor_covariance((diff * r[:, None]).T @ diff / mass[j], eps_cov)
        new_w = np.maximum(mass, 1e-8)
        mix = Mixture(new_means, new_covs, new_w / new_w.sum())
        history.append(log_likelihood(mix, X))
    mix.log_likelihood = history[-1]
    mix.history = history
    mix.reseeds = reseeds
    return mix


def aic(log_lik: float, k: int) -> float:
    """Akaike criterion with three parameters (mean, covariance, weight) per component."""
    return 2.0 * (3 * k) - 2.0 * log_lik


def select_k_and_fit(data, kmax: int = 4, iterations: int = 10, seed: int = 0,
                     eps_cov: float = 1e-6, direction: str = "min",
                     rng: Optional[np.random.Generator] = None) -> Mixture:
    """Fit mixtures with 1..kmax components and keep the best AIC.

    ``direction="min"`` picks the lowest AIC (the usual convention);
    ``"max"`` picks the highest.
    """
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, d = X.shape
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(seed)
    kcap = max(1, min(kmax, n // (d + 1)))
    best, best_score = None, None
    fallback = None
    for k in range(1, kcap + 1):
        try:
            cand = fit_em(X, k, iterations, eps_cov=eps_cov, rng=rng)
        except (NumericError, np.linalg.LinAlgError, ValueError) as exc:
            logger.debug("EM with k=%d failed: %s", k, exc)
            continue
        if k == 1:
            fallback = cand
        score = aic(cand.log_likelihood, k)
        if not math.isfinite(score):
            continue
        better = best_score is None or (score < best_score if direction == "min" else score > best_score)
        if better:
            best, best_score = cand, score
    if best is None:
        if fallback is not None:
            return fallback
        return fit_em(X, 1, 0, eps_cov=eps_cov, rng=rng)
    return best


def data_range_radius(X: np.ndarray, radius_divisor: float = 20.0) -> float:
    """Creation radius: global feature range divided by ``radius_divisor``."""
    span = float(np.max(X) - np.min(X))
    if span <= 0:
        span = 1.0
    return span / radius_divisor


def train_initial(features, labels, kmax: int = 4, iterations: int = 10, seed: int = 0,
                  radius_divisor: float = 20.0, direction: str = "min",
                  rng: Optional[np.random.Generator] = None) -> GmmModel:
    """Batch-train one mixture per class and merge them into a classifier.

    Component weights are scaled by class frequency, ``sp`` starts at
    ``weight * len(T)``, ``theta`` is the lowest same-class pertinence over
    the training set and ``cfc`` the global range over ``radius_divisor``.
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=int).reshape(-1)
    n, d = X.shape
    if n == 0 or y.shape[0] != n:
        raise ValueError("training set must be non-empty with one label per row")
    rng = rng if rng is not None else np.random.default_rng(seed)
    cfc = data_range_radius(X, radius_divisor)
    eps_cov = 1e-6 * cfc ** 2
    gaussians = []
    for c in np.unique(y):
        Xc = X[y == c]
        prior = Xc.shape[0] / n
        if Xc.shape[0] < d + 1:
            # too few points for a covariance estimate
            gaussians.append(Gaussian(Xc.mean(axis=0), cfc * np.eye(d), prior, prior * n, int(c)))
            continue
        mix = select_k_and_fit(Xc, kmax, iterations, eps_cov=eps_cov, direction=direction, rng=rng)
        for j in range(mix.k):
            w = float(mix.weights[j]) * prior
            gaussians.append(Gaussian(mix.means[j], mix.covariances[j], w, w * n, int(c)))
    model = GmmModel(gaussians, theta=0.0, cfc=cfc, eps_cov=eps_cov)
    model.theta = training_reach(model, X, y)
    return model


def training_reach(model: GmmModel, X: np.ndarray, y: np.ndarray) -> float:
    """Lowest same-class pertinence over (X, y)."""
    logd = _batch_log_pdf(X, model.means, model._precs, model._lognorms)
    same = model.labels[None, :] == y[:, None]
    best = np.where(same, logd, -np.inf).max(axis=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(np.exp(best.min()))
