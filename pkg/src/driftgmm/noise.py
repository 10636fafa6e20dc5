"""kDN (k-Disagreeing Neighbors) noise filtering."""
from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


def _kdn_against(x, y, X_ref: np.ndarray, y_ref: np.ndarray, k: int) -> float:
    if X_ref.shape[0] == 0:
        return 0.0
    k = min(k, X_ref.shape[0])
    dist = np.sum((X_ref - x) ** 2, axis=1)
    # stable sort keeps the lower index first on distance ties
    nn = np.argsort(dist, kind="stable")[:k]
    return float(np.count_nonzero(y_ref[nn] != y)) / k


def kdn(x, y, reference_X, reference_y, k: int = 5, exclude: int | None = None) -> float:
    """Fraction of the ``k`` Euclidean nearest neighbours whose label differs from ``y``.

    ``exclude`` drops one reference index (the observation itself when
    scoring a set it belongs to). With fewer than ``k`` references all of
    them are used.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X_ref = np.atleast_2d(np.asarray(reference_X, dtype=float))
    y_ref = np.asarray(reference_y).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if exclude is not None:
        keep = np.ones(X_ref.shape[0], dtype=bool)
        keep[exclude] = False
        X_ref, y_ref = X_ref[keep], y_ref[keep]
    return _kdn_against(x, y, X_ref, y_ref, k)


def kdn_scores(X, y, k: int = 5) -> np.ndarray:
    """kDN of every row of ``(X, y)`` against the rest of the set."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).reshape(-1)
    n = X.shape[0]
    if n < 2:
        return np.zeros(n)
    sq = np.sum(X ** 2, axis=1)
    dist = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(dist, np.inf)
    kk = min(k, n - 1)
    nn = np.argsort(dist, axis=1, kind="stable")[:, :kk]
    return np.count_nonzero(y[nn] != y[:, None], axis=1) / kk


def filter_training_set(X, y, k: int = 5, threshold: float = 0.8):
    """Drop observations whose kDN exceeds ``threshold``.

    Scores are computed against the original set. A class is never emptied:
    if every member of a class would go, its least noisy member is kept.
    Returns ``(X_kept, y_kept, keep_mask)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).reshape(-1)
    scores = kdn_scores(X, y, k)
    keep = scores <= threshold
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if not keep[members].any():
            saved = members[np.argmin(scores[members])]
            keep[saved] = True
            logger.warning("kDN filter would empty class %s; keeping one observation", c)
    return X[keep], y[keep], keep


class ValidationWindow:
    """Sliding FIFO window of recent labeled observations, oldest first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._X = None
        self._y = np.empty(capacity, dtype=int)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def add(self, x, y) -> None:
        x = np.asarray(x, dtype=float).reshape(-1)
        if self._X is None:
            self._X = np.empty((self.capacity, x.shape[0]))
        if self._n == self.capacity:
            self._X[:-1] = self._X[1:]
            self._y[:-1] = self._y[1:]
            self._n -= 1
        self._X[self._n] = x
        self._y[self._n] = int(y)
        self._n += 1

    def extend(self, X, y) -> None:
        for xi, yi in zip(X, y):
            self.add(xi, yi)

    def clear(self) -> None:
        self._n = 0

    @property
    def entries(self):
        X, y = self.arrays()
        return [(X[i].copy(), int(y[i])) for i in range(self._n)]

    def arrays(self):
        """Views of the stored features and labels (oldest first)."""
        if self._X is None:
            return np.empty((0, 0)), np.empty(0, dtype=int)
        return self._X[: self._n], self._y[: self._n]


def is_noisy(window: ValidationWindow, x, y, k: int = 5, threshold: float = 0.8) -> bool:
    """kDN of ``(x, y)`` against the window exceeds ``threshold``.

    The observation is appended to the window whatever the verdict.
    """
    X_ref, y_ref = window.arrays()
    x = np.asarray(x, dtype=float).reshape(-1)
    noisy = len(window) > 0 and _kdn_against(x, y, X_ref, y_ref, k) > threshold
    window.add(x, y)
    return noisy
