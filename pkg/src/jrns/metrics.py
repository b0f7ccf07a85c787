"""Selection and estimation quality measures."""

from __future__ import annotations

import numpy as np


def confusion_counts(est, truth, scope: str = "full"):
    """(TP, TN, FP, FN) of a binary selection against the truth.

    scope "upper" restricts to the strict upper triangle (used for Omega,
    whose diagonal is never scored).
    """
    est = np.asarray(est) != 0
    truth = np.asarray(truth) != 0
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    if scope == "upper":
        if est.ndim != 2 or est.shape[0] != est.shape[1]:
            raise ValueError("upper-triangle scope needs a square matrix")
        iu = np.triu_indices(est.shape[0], k=1)
        est = est[iu]
        truth = truth[iu]
    elif scope != "full":
        raise ValueError("scope must be 'full' or 'upper'")
    tp = int(np.sum(est & truth))
    tn = int(np.sum(~est & ~truth))
    fp = int(np.sum(est & ~truth))
    fn = int(np.sum(~est & truth))
    return tp, tn, fp, fn


def mcc(counts) -> float:
    """Matthews correlation coefficient; 0 when any denominator factor is 0."""
    tp, tn, fp, fn = (float(c) for c in counts)
    if min(tp, tn, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0.0:
        return 0.0
    return (tp * tn - fp * fn) / np.sqrt(denom)


def sensitivity(counts) -> float:
    """TP / (TP + FN); 1.0 when there are no positives to find."""
    tp, _, _, fn = (float(c) for c in counts)
    if min(tp, fn) < 0:
        raise ValueError("counts must be non-negative")
    return tp / (tp + fn) if tp + fn > 0 else 1.0


def specificity(counts) -> float:
    """TN / (TN + FP); 1.0 when there are no negatives to keep."""
    _, tn, fp, _ = (float(c) for c in counts)
    if min(tn, fp) < 0:
        raise ValueError("counts must be non-negative")
    return tn / (tn + fp) if tn + fp > 0 else 1.0


def relative_error(est, truth) -> float:
    """Frobenius norm of (est - truth) relative to truth."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    denom = float(np.linalg.norm(truth))
    if denom == 0.0:
        raise ValueError("truth matrix has zero norm")
    return float(np.linalg.norm(est - truth)) / denom


def coverage(intervals, truth, entries) -> float:
    """Fraction of the listed entries whose true value lies inside its
    interval (inclusive).  Entries with NaN bounds (no nonzero draws) are
    skipped; NaN is returned if nothing remains."""
    intervals = np.asarray(intervals, dtype=float)
    truth = np.asarray(truth, dtype=float)
    hits = 0
    valid = 0
    for i, j in entries:
        lo, hi = intervals[i, j]
        if np.isnan(lo) or np.isnan(hi):
            continue
        valid += 1
        if lo <= truth[i, j] <= hi:
            hits += 1
    return hits / valid if valid else float("nan")
