"""Nonparametric comparison of several algorithms over paired trials.

* :func:`friedman` ranks each row (1 = best, midranks on ties) and computes the
  tie-corrected Friedman chi-square statistic.
* :func:`hommel_posthoc` compares a control column against the rest with
  rank z-tests and Hommel's step-up adjusted p-values.
* :func:`contrast_estimation` builds the median-based contrast matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import chdtrc, ndtr
from scipy.stats import rankdata


@dataclass(frozen=True)
class FriedmanResult:
    ranks: np.ndarray        # per-row ranks, runs x algorithms
    average_ranks: np.ndarray
    statistic: float
    p_value: float
    n: int
    k: int


def friedman(results, higher_is_better: bool = False) -> FriedmanResult:
    """Friedman test on a runs x algorithms table (default: lower is better)."""
    X = np.asarray(results, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError("need at least 2 runs and 2 algorithms")
    n, k = X.shape
    ranks = rankdata(-X if higher_is_better else X, method="average", axis=1)
    R = ranks.mean(axis=0)
    ties = 0.0
    for row in X:
        _, t = np.unique(row, return_counts=True)
        ties += float(np.sum(t ** 3 - t))
    correction = 1.0 - ties / (n * (k ** 3 - k))
    if correction <= 0:
        return FriedmanResult(ranks, R, 0.0, 1.0, n, k)
    stat = 12.0 * n / (k * (k + 1)) * (float(np.sum(R ** 2)) - k * (k + 1) ** 2 / 4.0)
    stat = max(stat, 0.0) / correction
    return FriedmanResult(ranks, R, stat, float(chdtrc(k - 1, stat)), n, k)


def hommel_adjust(p) -> np.ndarray:
    """Hommel adjusted p-values, returned in the input order."""
    p = np.asarray(p, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    ps = p[order]
    adj = ps.copy()
    for j in range(m, 1, -1):
        c = float(np.min(j * ps[m - j:] / np.arange(1, j + 1)))
        adj[m - j:] = np.maximum(adj[m - j:], c)
        adj[:m - j] = np.maximum(adj[:m - j], np.minimum(j * ps[:m - j], c))
    adj = np.minimum(np.maximum(adj, ps), 1.0)
    out = np.empty(m)
    out[order] = adj
    return out


@dataclass(frozen=True)
class Comparison:
    name: str
    z: float
    p: float
    apv: float
    rejected: bool


def hommel_posthoc(average_ranks, n: int, control: int, names=None,
                   alpha: float = 0.05) -> list:
    R = np.asarray(average_ranks, dtype=float)
    k = R.size
    names = list(names) if names is not None else [str(i) for i in range(k)]
    se = math.sqrt(k * (k + 1) / (6.0 * n))
    others = [i for i in range(k) if i != control]
    z = np.array([(R[i] - R[control]) / se for i in others])
    p = 2.0 * ndtr(-np.abs(z))
    apv = hommel_adjust(p)
    return [Comparison(names[i], float(zi), float(pi), float(ai), bool(ai <= alpha))
            for i, zi, pi, ai in zip(others, z, p, apv)]


def contrast_estimation(perf) -> np.ndarray:
    """Median-based contrasts from a datasets x algorithms performance table.

    ``M[i, j] > 0`` means algorithm ``i`` tends to score higher than ``j``.
    """
    P = np.asarray(perf, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValueError("need at least 2 datasets")
    k = P.shape[1]
    D = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            D[i, j] = np.median(P[:, i] - P[:, j])
            D[j, i] = -D[i, j]
    m = D.mean(axis=1)
    return m[:, None] - m[None, :]
