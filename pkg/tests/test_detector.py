import numpy as np
import pytest

from driftgmm.detector import EDDM, Level


def test_all_correct_stays_normal():
    d = EDDM()
    assert all(d.update(False) == Level.NORMAL for _ in range(5000))


def test_detects_error_rate_jump():
    hits = []
    for seed in range(10):
        r = np.random.default_rng(seed)
        errs = np.r_[r.random(500) < 0.05, r.random(500) < 0.60]
        d = EDDM()
        first = next((t for t, e in enumerate(errs) if d.update(bool(e)) == Level.DRIFT), None)
        hits.append(first is not None and 500 <= first < 600)
    assert sum(hits) >= 9


def test_reset():
    d = EDDM()
    for e in np.random.default_rng(0).random(300) < 0.3:
        d.update(bool(e))
    d.reset()
    assert d.update(False) == Level.NORMAL
    assert d.error_count == 0 and d.mean == 0 and d.best_score == 0
    once = d.reset().copy()
    assert d.reset() == once


def test_reset_replay_equivalence():
    r = np.random.default_rng(3)
    prefix, suffix = r.random(400) < 0.2, r.random(600) < 0.2
    a = EDDM()
    for e in prefix:
        a.update(bool(e))
    a.reset()
    b = EDDM()
    assert [a.update(bool(e)) for e in suffix] == [b.update(bool(e)) for e in suffix]


def test_best_score_non_decreasing():
    d = EDDM()
    best = 0.0
    for e in np.random.default_rng(1).random(3000) < 0.1:
        d.update(bool(e))
        assert d.best_score >= best
        best = d.best_score


def test_welford_matches_numpy():
    d = EDDM(min_errors=1)
    errs = np.random.default_rng(2).random(2000) < 0.1
    for e in errs:
        d.update(bool(e))
    idx = np.flatnonzero(errs) + 1
    dist = np.diff(np.r_[0, idx])
    assert d.mean == pytest.approx(dist.mean(), rel=1e-12)
    assert d.std == pytest.approx(dist.std(), rel=1e-9)


def test_threshold_mapping():
    assert EDDM().drift_threshold == pytest.approx(0.9)
    assert EDDM(c_scale=1.5).drift_threshold == pytest.approx(0.85)
    with pytest.raises(ValueError):
        EDDM(alpha=0.8, beta=0.9)


def test_deterministic():
    errs = np.random.default_rng(5).random(1000) < 0.15
    a, b = EDDM(), EDDM()
    assert [a.update(bool(e)) for e in errs] == [b.update(bool(e)) for e in errs]


@pytest.mark.parametrize("rate", [0.05, 0.2])
def test_false_drift_rate_on_stationary_errors(rate):
    """Constant-rate i.i.d. errors: fraction of 100 runs of length 2000 that raise DRIFT."""
    fired = 0
    for seed in range(100):
        d = EDDM()
        errs = np.random.default_rng(seed).random(2000) < rate
        fired += any(d.update(bool(e)) == Level.DRIFT for e in errs)
    print(f"false-drift rate at error rate {rate}: {fired}%")
    assert fired <= 5
