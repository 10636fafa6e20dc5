"""EDDM drift detector: monitors the distance (in observations) between errors."""
from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field


class Level(enum.IntEnum):
    NORMAL = 0
    WARNING = 1
    DRIFT = 2


@dataclass
class EDDM:
    """Early drift detection from the distribution of inter-error distances.

    Once ``min_errors`` errors have been seen, the score ``mean + 2*std`` of
    the distances is compared with its running maximum. A ratio below
    ``alpha`` means WARNING; below ``1 - c_scale*(1 - beta)`` means DRIFT.
    The level only changes when an error is recorded.
    """

    alpha: float = 0.95
    beta: float = 0.90
    c_scale: float = 1.0
    min_errors: int = 30

    steps: int = field(default=0, init=False)
    last_error_step: int = field(default=0, init=False)
    error_count: int = field(default=0, init=False)
    mean: float = field(default=0.0, init=False)
    m2: float = field(default=0.0, init=False)
    best_score: float = field(default=0.0, init=False)
    level: Level = field(default=Level.NORMAL, init=False)

    def __post_init__(self):
        if not self.drift_threshold < self.alpha <= 1.0:
            raise ValueError("need drift threshold < alpha <= 1")
        if self.min_errors < 1:
            raise ValueError("min_errors must be positive")

    @property
    def drift_threshold(self) -> float:
        return 1.0 - self.c_scale * (1.0 - self.beta)

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / self.error_count) if self.error_count else 0.0

    @property
    def ratio(self) -> float:
        if self.best_score <= 0:
            return 1.0
        return (self.mean + 2.0 * self.std) / self.best_score

    def reset(self) -> "EDDM":
        self.steps = 0
        self.last_error_step = 0
        self.error_count = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.best_score = 0.0
        self.level = Level.NORMAL
        return self

    def copy(self) -> "EDDM":
        return copy.copy(self)

    def update(self, error: bool) -> Level:
        self.steps += 1
        if not error:
            return self.level
        distance = self.steps - self.last_error_step
        self.last_error_step = self.steps
        self.error_count += 1
        delta = distance - self.mean
        self.mean += delta / self.error_count
        self.m2 += delta * (distance - self.mean)
        if self.error_count < self.min_errors:
            return self.level
        score = self.mean + 2.0 * self.std
        if score > self.best_score:
            self.best_score = score
        r = score / self.best_score
        if r < self.drift_threshold:
            self.level = Level.DRIFT
        elif r < self.alpha:
            self.level = Level.WARNING
        else:
            self.level = Level.NORMAL
        return self.level
