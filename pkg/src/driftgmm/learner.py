"""The full online learner: bootstrap, online classification and adaptation,
drift monitoring, pool-assisted recovery and retraining."""
from __future__ import annotations

import enum
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .adaptation import create_gaussian, non_severe_adaptation
from .detector import EDDM, Level
from .gmm import GmmModel, train_initial
from .noise import ValidationWindow, filter_training_set, is_noisy
from .pool import ModelPool

logger = logging.getLogger(__name__)


class Mechanism(str, enum.Enum):
    NON_SEVERE = "non-severe"
    SEVERE = "severe"
    POOL = "pool"
    FILTER = "filter"


class Phase(str, enum.Enum):
    BOOTSTRAP = "bootstrap"
    ONLINE = "online"
    COLLECTING = "collecting"


@dataclass(frozen=True)
class LearnerConfig:
    m: int = 50
    kmax: int = 4
    em_iterations: int = 10
    radius_divisor: float = 20.0
    pool_capacity: int = 20
    kdn_k: int = 5
    kdn_threshold: float = 0.8
    alpha: float = 0.95
    beta: float = 0.90
    c_scale: float = 1.0
    min_errors: int = 30
    swap_fraction: float = 0.30
    carryover: float = 0.0  # share of the warning buffer kept when DRIFT fires
    aic_direction: str = "min"
    seed: int = 0
    disabled: frozenset = frozenset()

    def __post_init__(self):
        if self.m < 10:
            raise ValueError("m must be >= 10")
        for name in ("kmax", "em_iterations", "pool_capacity", "kdn_k", "min_errors"):
            if getattr(self, name) < 1 and not (name == "em_iterations" and self.em_iterations == 0):
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.carryover <= 1.0:
            raise ValueError("carryover must be in [0, 1]")
        if self.radius_divisor <= 0:
            raise ValueError("radius_divisor must be positive")
        object.__setattr__(self, "disabled", frozenset(Mechanism(d) for d in self.disabled))

    def enabled(self, mechanism: Mechanism) -> bool:
        return mechanism not in self.disabled


def ablation_config(config: LearnerConfig, disable: Iterable) -> LearnerConfig:
    """Same configuration with the named mechanisms turned off."""
    return replace(config, disabled=frozenset(config.disabled) | {Mechanism(d) for d in disable})


def default_m(dim: int) -> int:
    return 50 if dim <= 3 else 200


@dataclass
class Event:
    timestamp: int
    prediction: int
    label: int
    error: bool
    level: str
    n_gaussians: int
    pool_size: int
    phase: str


@dataclass
class Counters:
    rejected: int = 0
    adaptations: int = 0
    filtered: int = 0
    created: int = 0
    warnings: int = 0
    drifts: int = 0
    swaps: int = 0
    retrains: int = 0
    drift_times: list = field(default_factory=list)
    retrain_times: list = field(default_factory=list)


class OnlineGmmLearner:
    """Test-then-train classifier; call :meth:`process` once per labeled observation."""

    def __init__(self, config: LearnerConfig = LearnerConfig()):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.model: Optional[GmmModel] = None
        self.window = ValidationWindow(config.m)
        self.detector = EDDM(config.alpha, config.beta, config.c_scale, config.min_errors)
        self.pool = ModelPool(config.pool_capacity)
        self.phase = Phase.BOOTSTRAP
        self.buffer: deque = deque(maxlen=config.m)
        self.warning_active = False
        self.swapped_from_pool = False
        self.counters = Counters()
        self.t = 0
        self._label_counts: Counter = Counter()

    # -- helpers -----------------------------------------------------------
    def _majority(self) -> int:
        if not self._label_counts:
            return 0
        top = max(self._label_counts.values())
        return min(c for c, n in self._label_counts.items() if n == top)

    def _train(self, X: np.ndarray, y: np.ndarray) -> None:
        cfg = self.config
        if cfg.enabled(Mechanism.FILTER) and X.shape[0] > cfg.kdn_k:
            Xf, yf, _ = filter_training_set(X, y, cfg.kdn_k, cfg.kdn_threshold)
        else:
            Xf, yf = X, y
        self.model = train_initial(Xf, yf, cfg.kmax, cfg.em_iterations, radius_divisor=cfg.radius_divisor,
                                   direction=cfg.aic_direction, rng=self.rng)
        self.window.clear()
        self.window.extend(X, y)
        self.detector.reset()
        self.buffer.clear()
        self.warning_active = False
        self.swapped_from_pool = False
        self.phase = Phase.ONLINE

    def _buffer_arrays(self):
        X = np.array([b[0] for b in self.buffer])
        y = np.array([b[1] for b in self.buffer], dtype=int)
        return X, y

    # -- main entry point --------------------------------------------------
    def process(self, x, y_true: int):
        """Predict ``x``, then learn from ``(x, y_true)``. Returns ``(prediction, event)``."""
        t = self.t
        self.t += 1
        x = np.asarray(x, dtype=float).reshape(-1)
        y_true = int(y_true)
        cfg = self.config

        if not np.all(np.isfinite(x)):
            self.counters.rejected += 1
            logger.warning("rejected non-finite observation at t=%d", t)
            pred = self._majority() if self.model is None else int(self.model.labels[np.argmax(self.model.weights)])
            return pred, self._event(t, pred, y_true)

        if self.phase is Phase.BOOTSTRAP:
            pred = self._majority()
            self._label_counts[y_true] += 1
            self.buffer.append((x, y_true))
            if len(self.buffer) == cfg.m:
                self._train(*self._buffer_arrays())
            return pred, self._event(t, pred, y_true)

        pred = self.model.predict(x)
        error = pred != y_true

        if cfg.enabled(Mechanism.NON_SEVERE) and y_true not in self.model.classes:
            # a class never seen in training bypasses the filter, which would reject it
            self.window.add(x, y_true)
            create_gaussian(self.model, x, y_true)
            self.counters.created += 1
        elif cfg.enabled(Mechanism.NON_SEVERE):
            if cfg.enabled(Mechanism.FILTER):
                noisy = is_noisy(self.window, x, y_true, cfg.kdn_k, cfg.kdn_threshold)
            else:
                self.window.add(x, y_true)
                noisy = False
            if noisy:
                self.counters.filtered += 1
            else:
                self.counters.adaptations += 1
                if non_severe_adaptation(self.model, x, y_true):
                    self.counters.created += 1

        if self.phase is Phase.ONLINE:
            if cfg.enabled(Mechanism.SEVERE):
                self._monitor(t, x, y_true, error)
        else:
            self.buffer.append((x, y_true))
        if self.phase is Phase.COLLECTING:
            self._collect_step(t)
        return pred, self._event(t, pred, y_true)

    def _monitor(self, t: int, x, y: int, error: bool) -> None:
        level = self.detector.update(error)
        if level is Level.NORMAL:
            if self.warning_active:
                self.buffer.clear()
                self.warning_active = False
            return
        if not self.warning_active:
            self.warning_active = True
            self.counters.warnings += 1
            self.buffer.clear()
            if self.config.enabled(Mechanism.POOL):
                self.pool.store(self.model, t)
        self.buffer.append((x, y))
        if level is Level.DRIFT:
            self.counters.drifts += 1
            self.counters.drift_times.append(t)
            self.phase = Phase.COLLECTING
            self.swapped_from_pool = False
            keep = int(self.config.carryover * (self.config.m - 1))
            while len(self.buffer) > keep:
                self.buffer.popleft()

    def _collect_step(self, t: int) -> None:
        cfg = self.config
        n = len(self.buffer)
        if (not self.swapped_from_pool and cfg.enabled(Mechanism.POOL)
                and n >= math.ceil(cfg.swap_fraction * cfg.m) and len(self.pool)):
            X, y = self._buffer_arrays()
            best = self.pool.best_model(X, y)
            if best is not None:
                self.model = best
                self.swapped_from_pool = True
                self.counters.swaps += 1
        if n >= cfg.m:
            if cfg.enabled(Mechanism.POOL):
                self.pool.store(self.model, t)
            self.counters.retrains += 1
            self.counters.retrain_times.append(t)
            self._train(*self._buffer_arrays())

    def _event(self, t: int, pred: int, y: int) -> Event:
        return Event(t, int(pred), y, pred != y, self.detector.level.name, 0 if self.model is None else len(self.model),
                     len(self.pool), self.phase.name)

    def run(self, X, y) -> list:
        return [self.process(xi, yi)[1] for xi, yi in zip(X, y)]
