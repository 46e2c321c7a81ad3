"""Confusion matrix and the aggregated metric block (support-weighted
precision/recall/F1; the reported "MSE" is the misclassification rate)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fcdsae.errors import DomainError

N_CLASSES = 3


@dataclass
class ConfusionMatrix:
    """3x3 counts; rows index the true class, columns the predicted class."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        header = "true\\pred," + ",".join(str(c) for c in range(N_CLASSES))
        rows = [f"{t}," + ",".join(str(int(v)) for v in self.counts[t])
                for t in range(N_CLASSES)]
        return "\n".join([header] + rows) + "\n"


@dataclass
class MetricBlock:
    """Accuracy, support-weighted precision/recall/F1, and the error rate
    (1 - accuracy), which is what the reference results tabulate as MSE."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    mse: float

    def format_table(self) -> str:
        rows = [("Accuracy", self.accuracy), ("Precision", self.precision),
                ("Recall", self.recall), ("F1-Score", self.f1),
                ("MSE", self.mse)]
        return "\n".join(f"{name:<10} {value:.4f}" for name, value in rows)


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a 3x3 matrix."""
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise DomainError("label lists must have equal length")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if t not in (0, 1, 2) or p not in (0, 1, 2):
            raise DomainError(f"label out of range: true={t}, pred={p}")
        counts[t, p] += 1
    return ConfusionMatrix(counts=counts)


def metric_block(cm: ConfusionMatrix) -> MetricBlock:
    """Aggregate the confusion matrix with support-weighted averaging.

    A class with zero predicted support contributes precision 0; a class
    with zero true support is skipped (weight 0 either way).
    """
    total = cm.total
    if total == 0:
        raise DomainError("empty confusion matrix")
    counts = cm.counts
    accuracy = float(np.trace(counts)) / total

    supports = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    precision_sum = recall_sum = f1_sum = 0.0
    for c in range(N_CLASSES):
        if supports[c] == 0:
            continue
        tp = float(counts[c, c])
        prec = tp / predicted[c] if predicted[c] > 0 else 0.0
        rec = tp / supports[c]
        f1 = 2.0 * prec * rec / (prec + rec) if (prec + rec) > 0 else 0.0
        w = supports[c] / total
        precision_sum += w * prec
        recall_sum += w * rec
        f1_sum += w * f1
    return MetricBlock(accuracy=accuracy, precision=precision_sum,
                       recall=recall_sum, f1=f1_sum, mse=1.0 - accuracy)
