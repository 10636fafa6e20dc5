import numpy as np
import pytest

from driftgmm.evaluation import (accuracy_over_time, class_recalls, cv_keep_mask, evaluate, geometric_mean, gmean,
                                 prequential_run, stream_cv, write_aot, write_results)
from driftgmm.learner import LearnerConfig
from driftgmm.streams import builtin_schedule, generate, stream_from_arrays


class Oracle:
    def __init__(self, y):
        self.y = list(y)

    def process(self, x, y):
        return self.y.pop(0), None


class Constant:
    def process(self, x, y):
        return 0, None


def test_perfect_learner():
    y = np.arange(1000) % 2
    r = evaluate(Oracle(y), np.zeros((1000, 1)), y, batch_size=500)
    assert r.overall_accuracy == 1.0 and [a for _, a, _ in r.aot] == [1.0, 1.0]


def test_constant_learner():
    y = np.r_[np.zeros(60, int), np.ones(40, int)]
    r = evaluate(Constant(), np.zeros((100, 1)), y)
    assert r.overall_accuracy == pytest.approx(0.6) and r.gmean == 0.0


def test_gmean_values():
    assert geometric_mean([1.0, 0.81]) == pytest.approx(0.9)
    assert geometric_mean([0.9, 0.9, 0.9]) == pytest.approx(0.9)
    assert geometric_mean([0.5, 0.0]) == 0.0
    assert gmean([0, 0, 1, 1], [0, 0, 1, 0]) == pytest.approx(np.sqrt(0.5))


def test_absent_class_excluded(caplog):
    assert class_recalls([0, 0], [0, 1], classes=[0, 1]) == {0: 0.5}
    assert "never occurs" in caplog.text


def test_aot_recomposes_accuracy():
    errors = np.random.default_rng(0).random(1234) < 0.3
    aot = accuracy_over_time(errors, 500)
    assert len(aot) == 3
    total = sum(a * n for _, a, n in aot) / sum(n for _, _, n in aot)
    assert total == pytest.approx(1 - errors.mean(), abs=1e-9)


def test_cv_mask():
    assert np.flatnonzero(~cv_keep_mask(90, 2)).tolist() == [1, 31, 61]
    assert np.flatnonzero(~cv_keep_mask(90, 1)).tolist() == [0, 30, 60]
    removed = np.zeros(95, int)
    for r in range(1, 31):
        removed += ~cv_keep_mask(95, r)
    assert np.all(removed == 1)
    with pytest.raises(ValueError):
        cv_keep_mask(90, 31)


def test_stream_cv_errors():
    s = stream_from_arrays(np.zeros((20, 2)), np.zeros(20))
    with pytest.raises(ValueError):
        stream_cv(s, runs=3)
    with pytest.raises(ValueError):
        stream_cv(generate(builtin_schedule("sine1")), runs=31)


def test_prequential_run_consistency():
    s = generate(builtin_schedule("circles", noise_rate=0.05, seed=0))
    r = prequential_run(s, LearnerConfig())
    assert r.overall_accuracy == pytest.approx(np.mean(r.predictions == s.y), abs=1e-12)
    assert len(r.aot) == 16 and r.runtime_seconds > 0 and 0 <= r.gmean <= 1


def test_stream_cv_lengths():
    s = generate(builtin_schedule("sine1", seed=0)).subset(np.arange(3000))
    results = stream_cv(s, runs=2, workers=1)
    assert [len(r.events) for r in results] == [2900, 2900]
    assert [r.run_id for r in results] == [1, 2]


def test_writers(tmp_path):
    y = np.arange(600) % 2
    r = evaluate(Oracle(y), np.zeros((600, 1)), y, batch_size=500, dataset_id="d", config_id="c")
    write_results([r], tmp_path / "res.csv")
    write_aot([r], tmp_path / "aot.csv")
    assert (tmp_path / "res.csv").read_text().splitlines()[1].startswith("0,d,c,600,1.0")
    assert len((tmp_path / "aot.csv").read_text().splitlines()) == 3
