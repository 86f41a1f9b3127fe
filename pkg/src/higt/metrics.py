"""Support-recovery scoring: precision, recall and their harmonic mean."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = ["RecoveryScore", "score", "aggregate"]


@dataclass(frozen=True)
class RecoveryScore:
    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int
    threshold: float


def score(b_est: np.ndarray, b_true: np.ndarray, threshold: float = 1e-6) -> RecoveryScore:
    """Score the estimated support against the true support.

    An entry counts as estimated-nonzero iff ``|b_est| > threshold`` and as
    true-nonzero iff the true entry is nonzero.  Precision is 0 when nothing
    is estimated nonzero; recall is 0 when the truth is all zero; f1 is the
    harmonic mean (0 when precision + recall is 0).
    """
    b_est = np.asarray(b_est)
    b_true = np.asarray(b_true)
    if b_est.shape != b_true.shape:
        raise DimensionMismatch(
            f"estimate has shape {b_est.shape}, truth has shape {b_true.shape}"
        )
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    est = np.abs(b_est) > threshold
    true = b_true != 0
    tp = int(np.sum(est & true))
    fp = int(np.sum(est & ~true))
    fn = int(np.sum(~est & true))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RecoveryScore(
        precision=precision,
        recall=recall,
        f1=f1,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        threshold=float(threshold),
    )


def aggregate(values) -> tuple:
    """Mean and sample standard deviation (0 for a single value)."""
    a = np.asarray(list(values), dtype=np.float64)
    if a.size == 0:
        return float("nan"), float("nan")
    sd = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return float(a.mean()), sd
