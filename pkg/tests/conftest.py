import math

import numpy as np
import pytest


def brute_density(mean, cov, x):
    """Multivariate normal density by explicit quadratic form."""
    mean = np.asarray(mean, dtype=float)
    x = np.asarray(x, dtype=float)
    d = mean.shape[0]
    diff = x - mean
    quad = float(diff @ np.linalg.solve(cov, diff))
    return math.exp(-0.5 * quad) / math.sqrt((2 * math.pi) ** d * np.linalg.det(cov))


def random_spd(rng, d, scale=1.0):
    a = rng.normal(size=(d, d))
    return scale * (a @ a.T + 0.5 * np.eye(d))


def two_blobs(rng, n=100, sep=4.0, d=2):
    X0 = rng.normal(0.0, 0.5, size=(n, d))
    X1 = rng.normal(sep, 0.5, size=(n, d))
    X = np.vstack([X0, X1])
    y = np.r_[np.zeros(n, int), np.ones(n, int)]
    order = rng.permutation(2 * n)
    return X[order], y[order]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
