"""Detection metrics: accuracy, F1, and step-wise average precision.

Positive class is fake (label 1).  A score at or above the threshold
predicts fake.  Average precision uses the non-interpolated step-wise sum
over the descending-score sweep, with ties broken by original index order so
results are reproducible across implementations.
"""
from __future__ import annotations

import numpy as np

from .errors import DataError
from .validation import as_scored_set

__all__ = ["accuracy", "f1", "pr_sweep", "average_precision",
           "evaluate_scores", "THRESHOLD"]

THRESHOLD = 0.5


def accuracy(scores, labels, threshold: float = THRESHOLD) -> float:
    s, y = as_scored_set(scores, labels)
    predicted = (s >= threshold).astype(np.int64)
    return float((predicted == y).mean())


def f1(scores, labels, threshold: float = THRESHOLD) -> float:
    """F1 = 2TP / (2TP + FP + FN); 0 by convention when TP is 0.

    The count form is algebraically 2PR/(P+R) but rounds only once, so
    results are exact for integer confusion counts.
    """
    s, y = as_scored_set(scores, labels)
    predicted = (s >= threshold).astype(np.int64)
    tp = int(((predicted == 1) & (y == 1)).sum())
    fp = int(((predicted == 1) & (y == 0)).sum())
    fn = int(((predicted == 0) & (y == 1)).sum())
    if tp == 0:
        return 0.0  # covers P+R = 0 and P or R undefined-denominator cases
    return float(2 * tp / (2 * tp + fp + fn))


def pr_sweep(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """(precision, recall) along the descending-score sweep.

    Ties are broken by original index order (stable sort), so the sweep is a
    deterministic function of the input ordering.
    """
    s, y = as_scored_set(scores, labels)
    positives = int(y.sum())
    if positives == 0 or positives == y.size:
        raise DataError("precision-recall sweep needs both classes present")
    order = np.argsort(-s, kind="stable")
    hits = np.cumsum(y[order])
    ranks = np.arange(1, y.size + 1, dtype=np.float64)
    precision = hits / ranks
    recall = hits / positives
    return precision, recall


def average_precision(scores, labels) -> float:
    """AP = sum over the sweep of (R_n - R_{n-1}) * P_n."""
    precision, recall = pr_sweep(scores, labels)
    steps = np.diff(np.concatenate([[0.0], recall]))
    return float((steps * precision).sum())


def evaluate_scores(subsets: dict) -> dict:
    """{name: (scores, labels)} -> per-subset metrics plus their macro mean.

    The mean row is the arithmetic mean of the subset rows (macro average),
    taken in the given subset order.
    """
    if not subsets:
        raise DataError("no subsets to evaluate")
    report: dict = {"subsets": {}, "mean": {}}
    for name, (scores, labels) in subsets.items():
        report["subsets"][name] = {
            "acc": accuracy(scores, labels),
            "f1": f1(scores, labels),
            "ap": average_precision(scores, labels),
        }
    for key in ("acc", "f1", "ap"):
        vals = [row[key] for row in report["subsets"].values()]
        report["mean"][key] = float(np.mean(vals))
    return report
