"""Non-parametric comparison tests: Friedman with Nemenyi CD, Wilcoxon signed-rank."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as st


@dataclass
class FriedmanResult:
    ranks: np.ndarray  # average rank per approach, 1 = best
    statistic: float
    p_value: float
    critical_difference: float
    q_alpha: float


def nemenyi_q(k: int, alpha: float = 0.05) -> float:
    """Critical value of the Studentized range at infinite df, divided by sqrt(2)."""
    return float(st.studentized_range.ppf(1.0 - alpha, k, np.inf) / math.sqrt(2.0))


def critical_difference(k: int, n: int, alpha: float = 0.05, q: float | None = None) -> float:
    q = nemenyi_q(k, alpha) if q is None else q
    return q * math.sqrt(k * (k + 1) / (6.0 * n))


def friedman_nemenyi(scores, alpha: float = 0.05, higher_is_better: bool = True) -> FriedmanResult:
    """Friedman test over an (approach x dataset) score matrix plus the Nemenyi CD.

    Ties share the average rank. Uses the chi-square form of the statistic.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[0] < 2 or scores.shape[1] < 2:
        raise ValueError("need at least 2 approaches and 2 datasets")
    k, n = scores.shape
    signed = -scores if higher_is_better else scores
    ranks = np.apply_along_axis(st.rankdata, 0, signed)
    mean_ranks = ranks.mean(axis=1)
    stat = 12.0 * n / (k * (k + 1)) * (np.sum(mean_ranks ** 2) - k * (k + 1) ** 2 / 4.0)
    stat = max(0.0, float(stat))
    if np.allclose(stat, 0.0, atol=1e-12):
        stat, p = 0.0, 1.0
    else:
        p = float(st.chi2.sf(stat, k - 1))
    q = nemenyi_q(k, alpha)
    return FriedmanResult(mean_ranks, stat, p, critical_difference(k, n, q=q), q)


def wilcoxon_signed_rank(a, b) -> float:
    """Two-sided signed-rank p-value, normal approximation with tie correction.

    Zero differences are dropped; if nothing is left the p-value is 1.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    d = d[d != 0]
    n = d.shape[0]
    if n == 0:
        return 1.0
    ranks = st.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    mean = n * (n + 1) / 4.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(counts ** 3 - counts)) / 48.0
    if var <= 0:
        return 1.0
    z = (w_plus - mean) / math.sqrt(var)
    return float(min(1.0, 2.0 * st.norm.sf(abs(z))))
