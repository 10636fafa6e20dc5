"""Bounded FIFO pool of past classifiers."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gmm import GmmModel


@dataclass
class PoolEntry:
    model: GmmModel
    stored_at: int


class ModelPool:
    """Keeps up to ``capacity`` model snapshots; the oldest is evicted first."""

    def __init__(self, capacity: int = 20):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.entries: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.entries)

    def store(self, model: GmmModel, timestamp: int) -> None:
        self.entries.append(PoolEntry(model.copy(), int(timestamp)))

    def scores(self, X, y) -> np.ndarray:
        y = np.asarray(y)
        return np.array([float(np.mean(e.model.predict_many(X) == y)) for e in self.entries])

    def best_model(self, X, y) -> Optional[GmmModel]:
        """Snapshot with the highest accuracy on ``(X, y)``; ties go to the newest.

        Returns a copy so the pool entry stays untouched.
        """
        if not self.entries:
            return None
        if len(y) == 0:
            raise ValueError("recent observations must be non-empty")
        acc = self.scores(X, y)
        best = len(acc) - 1 - int(np.argmax(acc[::-1]))
        return self.entries[best].model.copy()
