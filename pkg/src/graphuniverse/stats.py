"""Correlation and classification statistics used by the validation suite.

Kept deliberately small and explicit: average-rank Spearman, Pearson with a
Student-t two-sided p-value (t = r * sqrt((N-2) / (1-r^2)), N-2 degrees of
freedom), and macro-averaged F1.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import t as student_t

from .core import DeterministicStream


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of the ranks they span."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson_correlation(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        return float("nan")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt((dx * dx).sum() * (dy * dy).sum())
    if denom == 0.0:
        return float("nan")
    return float(np.clip((dx * dy).sum() / denom, -1.0, 1.0))


def pearson_with_pvalue(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(r, two-sided p).  Degenerate inputs (zero variance, N < 3) give nan."""
    r = pearson_correlation(x, y)
    n = len(np.asarray(x))
    if not np.isfinite(r) or n < 3:
        return r, float("nan")
    if abs(r) >= 1.0:
        return r, 0.0
    t_stat = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(student_t.sf(abs(t_stat), df=n - 2))
    return r, min(p, 1.0)


def spearman_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation with average ranks for ties."""
    return pearson_correlation(average_ranks(x), average_ranks(y))


def macro_f1(y_true: np.ndarray, y_pred: np.ndarray, labels=None) -> float:
    """Unweighted mean of per-class F1; classes with no predicted and no true
    positives contribute 0 (standard zero-division convention)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if labels is None:
        labels = np.unique(np.concatenate([y_true, y_pred]))
    scores = []
    for label in labels:
        tp = int(((y_true == label) & (y_pred == label)).sum())
        fp = int(((y_true != label) & (y_pred == label)).sum())
        fn = int(((y_true == label) & (y_pred != label)).sum())
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return float(np.mean(scores))


def stratified_split(
    stream: DeterministicStream, labels: np.ndarray, train_fraction: float = 0.7
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class random split keeping at least one member of every class on
    each side (classes need >= 2 members)."""
    labels = np.asarray(labels)
    train_parts, test_parts = [], []
    for value in np.unique(labels):
        members = np.flatnonzero(labels == value)
        if len(members) < 2:
            raise ValueError(f"class {value} has fewer than 2 members")
        members = members[stream.permutation(len(members))]
        cut = int(round(train_fraction * len(members)))
        cut = max(1, min(cut, len(members) - 1))
        train_parts.append(members[:cut])
        test_parts.append(members[cut:])
    return (
        np.sort(np.concatenate(train_parts)),
        np.sort(np.concatenate(test_parts)),
    )
