"""Classification metrics: accuracy and macro-averaged F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RunMetrics", "compute_metrics"]


@dataclass
class RunMetrics:
    accuracy: float
    macro_f1: float
    per_class_f1: list
    n_test: int


def compute_metrics(predictions, labels, n_classes: int) -> RunMetrics:
    """Exact-match accuracy and unweighted mean F1 over all ``n_classes``.

    A class with no predictions and no true instances contributes an F1 of
    zero, which keeps macro-F1 conservative on imbalanced test sets.
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise ValueError(
            f"predictions and labels must be equal-length 1-D arrays, "
            f"got {predictions.shape} and {labels.shape}")
    if len(predictions) == 0:
        raise ValueError("cannot compute metrics on empty inputs")

    accuracy = float((predictions == labels).mean())
    per_class = []
    for c in range(n_classes):
        tp = int(((predictions == c) & (labels == c)).sum())
        fp = int(((predictions == c) & (labels != c)).sum())
        fn = int(((predictions != c) & (labels == c)).sum())
        denom = 2 * tp + fp + fn
        per_class.append(2.0 * tp / denom if denom > 0 else 0.0)
    return RunMetrics(
        accuracy=accuracy,
        macro_f1=float(np.mean(per_class)),
        per_class_f1=per_class,
        n_test=len(predictions),
    )
