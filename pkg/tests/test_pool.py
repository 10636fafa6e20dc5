import numpy as np
import pytest

from driftgmm.gmm import Gaussian, GmmModel, train_initial
from driftgmm.pool import ModelPool
from conftest import two_blobs


def tiny(label):
    return GmmModel([Gaussian(np.zeros(1), np.eye(1), 1.0, 1.0, label)])


def test_store_and_evict():
    p = ModelPool(20)
    p.store(tiny(0), 0)
    assert len(p) == 1
    for t in range(1, 21):
        p.store(tiny(t % 3), t)
    assert len(p) == 20 and p.entries[0].stored_at == 1


def test_snapshot_semantics():
    p = ModelPool()
    m = tiny(0)
    p.store(m, 0)
    m.means[0] = 99.0
    assert p.entries[0].model.means[0, 0] == 0.0


def test_best_model_cases(rng):
    p = ModelPool()
    assert p.best_model(np.zeros((3, 1)), [0, 0, 0]) is None
    p.store(tiny(1), 0)
    assert p.best_model(np.zeros((3, 1)), [0, 0, 0]).labels[0] == 1


def test_ties_go_to_newest():
    p = ModelPool()
    a, b = tiny(0), tiny(0)
    b.means[0] = 0.5
    p.store(a, 0)
    p.store(b, 1)
    assert p.best_model(np.zeros((2, 1)), [0, 0]).means[0, 0] == 0.5


def test_selects_matching_concept(rng):
    X, y = two_blobs(rng)
    model_a = train_initial(X, y, seed=0)
    model_b = train_initial(X, 1 - y, seed=0)
    p = ModelPool()
    p.store(model_a, 0)
    p.store(model_b, 1)
    Xr, yr = two_blobs(rng, n=20)
    best = p.best_model(Xr, 1 - yr)
    assert np.mean(best.predict_many(Xr) == 1 - yr) == pytest.approx(max(p.scores(Xr, 1 - yr)))
    assert np.allclose(best.means, model_b.means)
