"""Synthetic concept-drift streams and drift severity measurement.

Decision-rule concepts (sine, SEA, circles) draw the class first and then
rejection-sample a uniform input with that label, which keeps the classes
balanced. Virtual concepts place one truncated Gaussian cluster per class in
a 3x3 grid whose cell ownership never changes, so drifts only move P(x).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

ABRUPT = "abrupt"
GRADUAL = "gradual"
INCREMENTAL = "incremental"

GRID = 3
CELL = 1.0 / GRID
CLUSTER_SD = 0.06


def cell_owner(cell: int) -> int:
    row, col = divmod(cell, GRID)
    return (row + col) % GRID


def cell_of(X: np.ndarray) -> np.ndarray:
    ij = np.clip((X / CELL).astype(int), 0, GRID - 1)
    return ij[:, 1] * GRID + ij[:, 0]


def cell_center(cell: int) -> np.ndarray:
    row, col = divmod(cell, GRID)
    return np.array([(col + 0.5) * CELL, (row + 0.5) * CELL])


CELLS_BY_CLASS = {c: [cell for cell in range(GRID * GRID) if cell_owner(cell) == c] for c in range(GRID)}


@dataclass(frozen=True)
class ConceptSpec:
    """One concept: a labeling rule plus the input sampler that goes with it.

    kind:
      ``sine1``   params (reversed,)      label 1 iff x2 < sin(x1)
      ``sine2``   params (reversed,)      label 1 iff x2 < 0.5 + 0.3 sin(3 pi x1)
      ``sea``     params (threshold,)     label 1 iff x1 + x2 <= threshold
      ``circle``  params (cx, cy, r)      label 1 iff inside the circle
      ``virtual`` params (cell per class) label = owner of the grid cell
    """

    kind: str
    params: tuple
    dim: int = 2
    n_classes: int = 2
    low: float = 0.0
    high: float = 1.0
    priors: Optional[tuple] = None

    @property
    def is_virtual(self) -> bool:
        return self.kind == "virtual"

    def class_priors(self) -> np.ndarray:
        if self.priors is not None:
            return np.asarray(self.priors, dtype=float) / sum(self.priors)
        return np.full(self.n_classes, 1.0 / self.n_classes)

    def label(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k = self.kind
        if k == "sine1":
            y = X[:, 1] < np.sin(X[:, 0])
            return (y != bool(self.params[0])).astype(int)
        if k == "sine2":
            y = X[:, 1] < 0.5 + 0.3 * np.sin(3.0 * np.pi * X[:, 0])
            return (y != bool(self.params[0])).astype(int)
        if k == "sea":
            return (X[:, 0] + X[:, 1] <= self.params[0]).astype(int)
        if k == "circle":
            cx, cy, r = self.params
            return ((X[:, 0] - cx) ** 2 + (X[:, 1] - cy) ** 2 <= r * r).astype(int)
        if k == "virtual":
            return np.array([cell_owner(c) for c in cell_of(X)], dtype=int)
        raise ValueError(f"unknown concept kind {k!r}")

    def in_support(self, X) -> np.ndarray:
        """Whether the sampler of this concept has positive density at each row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.is_virtual:
            return np.all((X >= self.low) & (X <= self.high), axis=1)
        return np.isin(cell_of(X), np.asarray(self.params))

    def interpolate(self, other: "ConceptSpec", alpha: float) -> "ConceptSpec":
        if self.kind != other.kind or self.kind not in ("circle", "sea"):
            raise ValueError(f"cannot interpolate {self.kind!r} concepts")
        params = tuple((1 - alpha) * a + alpha * b for a, b in zip(self.params, other.params))
        return replace(self, params=params)

    # -- sampling ----------------------------------------------------------
    def sample_class(self, c: int, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` inputs whose true label under this concept is ``c``."""
        if self.is_virtual:
            center = cell_center(self.params[c])
            lo = center - CELL / 2
            out = np.empty((0, 2))
            while out.shape[0] < n:
                cand = rng.normal(center, CLUSTER_SD, size=(2 * (n - out.shape[0]) + 4, 2))
                ok = np.all((cand >= lo) & (cand < lo + CELL), axis=1)
                out = np.vstack([out, cand[ok]])
            return out[:n]
        out = np.empty((0, self.dim))
        while out.shape[0] < n:
            cand = rng.uniform(self.low, self.high, size=(4 * (n - out.shape[0]) + 8, self.dim))
            out = np.vstack([out, cand[self.label(cand) == c]])
        return out[:n]

    def sample(self, n: int, rng: np.random.Generator):
        y = rng.choice(self.n_classes, size=n, p=self.class_priors())
        X = np.empty((n, self.dim))
        for c in range(self.n_classes):
            idx = np.flatnonzero(y == c)
            if idx.size:
                X[idx] = self.sample_class(c, idx.size, rng)
        return X, y

    def sample_inputs(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Unlabeled inputs from the concept's input distribution."""
        if self.is_virtual:
            return self.sample(n, rng)[0]
        return rng.uniform(self.low, self.high, size=(n, self.dim))


@dataclass(frozen=True)
class Transition:
    kind: str = ABRUPT
    width: int = 0


@dataclass(frozen=True)
class ConceptSchedule:
    """Ordered concepts with their lengths, transition style and label noise.

    ``sizes`` gives the length of every concept; ``concept_size`` is the
    nominal length reported for the schedule.
    """

    name: str
    concepts: tuple
    sizes: tuple
    transition: Transition = field(default_factory=Transition)
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.concepts) != len(self.sizes):
            raise ValueError("one size per concept is required")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must be in [0, 1)")
        if len({c.dim for c in self.concepts}) != 1:
            raise ValueError("all concepts must share the input dimension")

    @property
    def length(self) -> int:
        return int(sum(self.sizes))

    @property
    def n_concepts(self) -> int:
        return len(self.concepts)

    @property
    def n_drifts(self) -> int:
        return len(self.concepts) - 1

    @property
    def concept_size(self) -> int:
        return int(self.sizes[-1])

    @property
    def dim(self) -> int:
        return self.concepts[0].dim

    @property
    def n_classes(self) -> int:
        return max(c.n_classes for c in self.concepts)

    @property
    def boundaries(self) -> list:
        """Stream index at which each concept after the first starts."""
        return [int(b) for b in np.cumsum(self.sizes)[:-1]]

    def with_noise(self, noise_rate: float) -> "ConceptSchedule":
        return replace(self, noise_rate=noise_rate)

    def with_seed(self, seed: int) -> "ConceptSchedule":
        return replace(self, seed=seed)


@dataclass
class Stream:
    X: np.ndarray
    y: np.ndarray
    clean_y: Optional[np.ndarray] = None
    drift_points: tuple = ()
    name: str = ""

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def flipped(self) -> np.ndarray:
        if self.clean_y is None:
            return np.zeros(len(self), dtype=bool)
        return self.y != self.clean_y

    def subset(self, keep: np.ndarray) -> "Stream":
        keep = np.asarray(keep)
        if keep.dtype == bool:
            idx = np.flatnonzero(keep)
        else:
            idx = keep
        drift = tuple(int(np.searchsorted(idx, d)) for d in self.drift_points)
        clean = None if self.clean_y is None else self.clean_y[idx]
        return Stream(self.X[idx], self.y[idx], clean, drift, self.name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"a{i + 1}" for i in range(self.dim)] + ["label"])
        for row, label in zip(self.X, self.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
        return buf.getvalue()


def inject_label_noise(y: np.ndarray, noise_rate: float, n_classes: int, rng: np.random.Generator) -> np.ndarray:
    """Replace each label, with probability ``noise_rate``, by a uniformly random other class."""
    y = np.asarray(y).copy()
    if noise_rate <= 0 or n_classes < 2:
        return y
    flip = rng.random(y.shape[0]) < noise_rate
    shift = rng.integers(1, n_classes, size=y.shape[0])
    y[flip] = (y[flip] + shift[flip]) % n_classes
    return y


def _concept_at(schedule: ConceptSchedule, t: int, starts: np.ndarray, rng: np.random.Generator) -> ConceptSpec:
    i = int(np.searchsorted(starts, t, side="right")) - 1
    tr = schedule.transition
    concept = schedule.concepts[i]
    if tr.kind == INCREMENTAL and i > 0:
        steps = tr.width or schedule.sizes[i]
        alpha = min(1.0, (t - starts[i] + 1) / steps)
        return schedule.concepts[i - 1].interpolate(concept, alpha)
    if tr.kind == GRADUAL and tr.width > 0:
        half = tr.width / 2.0
        # nearest boundary on either side
        for j in (i, i + 1):
            if 0 < j < len(starts) and abs(t - starts[j]) <= half:
                p_new = (t - (starts[j] - half)) / tr.width
                p_new = min(1.0, max(0.0, p_new))
                return schedule.concepts[j] if rng.random() < p_new else schedule.concepts[j - 1]
    return concept


def generate(schedule: ConceptSchedule) -> Stream:
    """Materialize a schedule into a labeled stream (deterministic given its seed)."""
    rng = np.random.default_rng(schedule.seed)
    n = schedule.length
    starts = np.concatenate([[0], np.cumsum(schedule.sizes)[:-1]]).astype(int)
    X = np.empty((n, schedule.dim))
    y = np.empty(n, dtype=int)
    tr = schedule.transition
    if tr.kind == ABRUPT or (tr.kind == GRADUAL and tr.width <= 0):
        for concept, start, size in zip(schedule.concepts, starts, schedule.sizes):
            X[start:start + size], y[start:start + size] = concept.sample(int(size), rng)
    else:
        for t in range(n):
            concept = _concept_at(schedule, t, starts, rng)
            xs, ys = concept.sample(1, rng)
            X[t], y[t] = xs[0], ys[0]
    noisy = inject_label_noise(y, schedule.noise_rate, schedule.n_classes, rng)
    return Stream(X, noisy, y, tuple(schedule.boundaries), schedule.name)


def severity(concept_a: ConceptSpec, concept_b: ConceptSpec, n_samples: int = 2000,
             noise_rate: float = 0.10, seed: int = 0) -> float:
    """Percentage of sampled inputs whose label changes from ``concept_a`` to ``concept_b``.

    Labels under ``concept_b`` carry label noise. Inputs outside the support
    of ``concept_a``'s sampler count as changed.
    """
    if concept_a.dim != concept_b.dim:
        raise ValueError("concepts must share input dimensionality")
    rng = np.random.default_rng(seed)
    if concept_a.is_virtual or concept_b.is_virtual:
        half = n_samples // 2
        X = np.vstack([concept_a.sample_inputs(half, rng), concept_b.sample_inputs(n_samples - half, rng)])
    else:
        low = min(concept_a.low, concept_b.low)
        high = max(concept_a.high, concept_b.high)
        X = rng.uniform(low, high, size=(n_samples, concept_a.dim))
    ya = concept_a.label(X)
    n_classes = max(concept_a.n_classes, concept_b.n_classes)
    yb = inject_label_noise(concept_b.label(X), noise_rate, n_classes, rng)
    changed = (ya != yb) | ~concept_a.in_support(X)
    return 100.0 * float(np.mean(changed))


def drift_severities(schedule: ConceptSchedule, n_samples: int = 2000, noise_rate: float = 0.10,
                     seed: int = 0) -> list:
    return [severity(a, b, n_samples, noise_rate, seed + i)
            for i, (a, b) in enumerate(zip(schedule.concepts[:-1], schedule.concepts[1:]))]


# -- built-in schedules ----------------------------------------------------

def _virtual_concepts(n_concepts: int, priors: tuple) -> tuple:
    position = [0, 0, 0]  # index into CELLS_BY_CLASS per class
    concepts = []
    for i in range(n_concepts):
        if i > 0:
            c = (i - 1) % GRID
            position[c] = (position[c] + 1) % len(CELLS_BY_CLASS[c])
        cells = tuple(CELLS_BY_CLASS[c][position[c]] for c in range(GRID))
        concepts.append(ConceptSpec("virtual", cells, dim=2, n_classes=3, priors=priors))
    return tuple(concepts)


def _sine(kind: str, n: int) -> tuple:
    return tuple(ConceptSpec(kind, (i % 2 == 1,)) for i in range(n))


SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)
CIRCLES = ((0.2, 0.5, 0.15), (0.4, 0.5, 0.2), (0.6, 0.5, 0.25), (0.8, 0.5, 0.3))


def builtin_schedule(name: str, noise_rate: float = 0.0, seed: int = 0) -> ConceptSchedule:
    """One of the seven built-in synthetic streams (case-insensitive name)."""
    key = name.lower().replace(" ", "").replace("_", "")
    if key == "virtual5":
        concepts = _virtual_concepts(5, (0.343, 0.355, 0.302))
        return ConceptSchedule("virtual5", concepts, (2000,) * 5, Transition(ABRUPT), noise_rate, seed)
    if key == "virtual9":
        concepts = _virtual_concepts(9, (0.326, 0.352, 0.322))
        return ConceptSchedule("virtual9", concepts, (2000,) + (1000,) * 8, Transition(ABRUPT), noise_rate, seed)
    if key == "circles":
        concepts = tuple(ConceptSpec("circle", p) for p in CIRCLES)
        return ConceptSchedule("circles", concepts, (2000,) * 4, Transition(INCREMENTAL, 2000), noise_rate, seed)
    if key == "sine1":
        return ConceptSchedule("sine1", _sine("sine1", 5), (2000,) * 5, Transition(ABRUPT), noise_rate, seed)
    if key == "sine2":
        return ConceptSchedule("sine2", _sine("sine2", 5), (2000,) * 5, Transition(ABRUPT), noise_rate, seed)
    if key in ("sea", "searec"):
        thresholds = SEA_THRESHOLDS * (2 if key == "searec" else 1)
        concepts = tuple(ConceptSpec("sea", (th,), dim=3, low=0.0, high=10.0) for th in thresholds)
        return ConceptSchedule(key, concepts, (2000,) * len(concepts), Transition(GRADUAL, 500), noise_rate, seed)
    raise ValueError(f"unknown dataset {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")


BUILTIN_NAMES = ("virtual5", "virtual9", "circles", "sine1", "sine2", "sea", "searec")


def load_csv(path, name: Optional[str] = None) -> tuple:
    """Read a numeric CSV whose last column is the label.

    A header row is skipped. Rows with non-numeric or non-finite values are
    rejected; returns ``(stream, rejected_count)``.
    """
    rows, labels, rejected = [], [], 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row:
                continue
            try:
                values = [float(v) for v in row[:-1]]
                label = float(row[-1])
            except ValueError:
                if i > 0:
                    rejected += 1
                continue
            if not all(math.isfinite(v) for v in values) or not math.isfinite(label) or label != int(label):
                rejected += 1
                continue
            rows.append(values)
            labels.append(int(label))
    if not rows:
        raise ValueError(f"no numeric rows in {path}")
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"inconsistent column count in {path}")
    X = np.array(rows, dtype=float)
    return Stream(X, np.array(labels, dtype=int), None, (), name or str(path)), rejected


def stream_from_arrays(X: Sequence, y: Sequence, name: str = "") -> Stream:
    return Stream(np.asarray(X, dtype=float), np.asarray(y, dtype=int), None, (), name)
