"""Prequential evaluation, stream cross-validation and run metrics."""
from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .learner import Event, LearnerConfig, OnlineGmmLearner
from .streams import Stream

logger = logging.getLogger(__name__)

SYNTHETIC_BATCH = 500
REAL_BATCH = 1000


@dataclass
class RunResult:
    events: list
    overall_accuracy: float
    gmean: float
    aot: list  # (batch index, accuracy, batch size)
    runtime_seconds: float
    run_id: int = 0
    dataset_id: str = ""
    config_id: str = ""
    counters: Optional[object] = None
    extra: dict = field(default_factory=dict)

    @property
    def predictions(self) -> np.ndarray:
        return np.array([e.prediction for e in self.events], dtype=int)

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.events], dtype=int)

    @property
    def errors(self) -> np.ndarray:
        return np.array([e.error for e in self.events], dtype=bool)

    def row(self) -> dict:
        c = self.counters
        return {
            "run": self.run_id,
            "dataset": self.dataset_id,
            "config": self.config_id,
            "n": len(self.events),
            "accuracy": self.overall_accuracy,
            "gmean": self.gmean,
            "aot_mean": float(np.mean([a[1] for a in self.aot])) if self.aot else float("nan"),
            "aot_std": float(np.std([a[1] for a in self.aot])) if self.aot else float("nan"),
            "runtime": self.runtime_seconds,
            "drifts": getattr(c, "drifts", 0),
            "retrains": getattr(c, "retrains", 0),
            "swaps": getattr(c, "swaps", 0),
            "created": getattr(c, "created", 0),
            "adaptations": getattr(c, "adaptations", 0),
        }


def geometric_mean(recalls: Sequence[float]) -> float:
    recalls = np.asarray(recalls, dtype=float)
    if recalls.size == 0:
        return float("nan")
    if np.any(recalls <= 0):
        return 0.0
    return float(np.exp(np.mean(np.log(recalls))))


def class_recalls(y_true, y_pred, classes=None) -> dict:
    """Recall per class; classes absent from ``y_true`` are skipped with a warning."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    present = set(np.unique(y_true).tolist())
    classes = sorted(present) if classes is None else list(classes)
    out = {}
    for c in classes:
        if c not in present:
            logger.warning("class %s never occurs in the true labels; excluded from G-mean", c)
            continue
        mask = y_true == c
        out[c] = float(np.mean(y_pred[mask] == c))
    return out


def gmean(y_true, y_pred, classes=None) -> float:
    """Geometric mean of per-class recall."""
    return geometric_mean(list(class_recalls(y_true, y_pred, classes).values()))


def accuracy_over_time(errors, batch_size: int) -> list:
    """Accuracy of consecutive disjoint batches as ``(index, accuracy, size)``."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    errors = np.asarray(errors, dtype=bool)
    out = []
    for b, start in enumerate(range(0, errors.shape[0], batch_size)):
        chunk = errors[start:start + batch_size]
        out.append((b, 1.0 - float(chunk.mean()), int(chunk.shape[0])))
    return out


def evaluate(learner, X, y, batch_size: int = SYNTHETIC_BATCH, run_id: int = 0, dataset_id: str = "",
             config_id: str = "") -> RunResult:
    """Test-then-train ``learner`` over ``(X, y)``.

    ``learner.process(x, y)`` must return ``(prediction, event_or_None)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if y.shape[0] == 0:
        raise ValueError("empty stream")
    events = []
    start = time.perf_counter()
    for t in range(y.shape[0]):
        pred, event = learner.process(X[t], y[t])
        if event is None:
            event = Event(t, int(pred), int(y[t]), int(pred) != int(y[t]), "", 0, 0, "")
        events.append(event)
    runtime = time.perf_counter() - start
    preds = np.array([e.prediction for e in events])
    errors = preds != y
    return RunResult(events, 1.0 - float(errors.mean()), gmean(y, preds), accuracy_over_time(errors, batch_size),
                     runtime, run_id, dataset_id, config_id, getattr(learner, "counters", None))


def prequential_run(stream: Stream, config: LearnerConfig = LearnerConfig(), batch_size: int = SYNTHETIC_BATCH,
                    run_id: int = 0, config_id: str = "") -> RunResult:
    learner = OnlineGmmLearner(config)
    return evaluate(learner, stream.X, stream.y, batch_size, run_id, stream.name, config_id)


def cv_keep_mask(n: int, run: int, period: int = 30) -> np.ndarray:
    """Indices kept by cross-validation run ``run`` (1-based): offset ``run-1`` of every block is dropped."""
    if not 1 <= run <= period:
        raise ValueError("run must be in 1..period")
    keep = np.ones(n, dtype=bool)
    keep[run - 1::period] = False
    return keep


def _cv_job(args):
    stream, config, batch_size, run, period, config_id = args
    return prequential_run(stream.subset(cv_keep_mask(len(stream), run, period)), config, batch_size, run, config_id)


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("DRIFTGMM_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def run_jobs(fn: Callable, jobs: list, workers: Optional[int] = None) -> list:
    """Map ``fn`` over ``jobs``, in a process pool when more than one worker is allowed."""
    n = worker_count(workers)
    if n == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, jobs))


def stream_cv(stream: Stream, config: LearnerConfig = LearnerConfig(), period: int = 30, runs: int = 30,
              batch_size: int = SYNTHETIC_BATCH, config_id: str = "", workers: Optional[int] = None) -> list:
    """Cross-validation for streams: run ``r`` drops offset ``r-1`` of every block of ``period``."""
    if runs > period:
        raise ValueError("runs must not exceed period")
    if len(stream) < period:
        raise ValueError("stream is shorter than the deletion period")
    jobs = [(stream, config, batch_size, r, period, config_id) for r in range(1, runs + 1)]
    return run_jobs(_cv_job, jobs, workers)


def _atomic_write(path, write: Callable) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        write(fh)
    os.replace(tmp, path)


RESULT_FIELDS = ["run", "dataset", "config", "n", "accuracy", "gmean", "aot_mean", "aot_std", "runtime",
                 "drifts", "retrains", "swaps", "created", "adaptations"]


def write_results(results: Sequence[RunResult], path, extra: Optional[dict] = None) -> None:
    """One row per run with the scalar metrics."""
    extra = extra or {}
    fields = RESULT_FIELDS + sorted(extra)

    def write(fh):
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in results:
            row = r.row()
            row.update(extra)
            w.writerow({k: _fmt(v) for k, v in row.items()})

    _atomic_write(path, write)


def write_aot(results: Sequence[RunResult], path) -> None:
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "dataset", "config", "batch", "accuracy", "size"])
        for r in results:
            for b, acc, size in r.aot:
                w.writerow([r.run_id, r.dataset_id, r.config_id, b, _fmt(acc), size])

    _atomic_write(path, write)


def write_events(result: RunResult, path) -> None:
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "prediction", "label", "error", "level", "n_gaussians", "pool_size", "phase"])
        for e in result.events:
            w.writerow([e.timestamp, e.prediction, e.label, int(e.error), e.level, e.n_gaussians, e.pool_size,
                        e.phase])

    _atomic_write(path, write)


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v
