"""Confusion matrices and macro-averaged scores.

Zero-denominator cases (a class never predicted, or absent from the truth)
score 0 rather than being skipped, so macro averages stay comparable across
methods. Per-class accuracy within one class equals its recall; minor-class
tables carry both columns because downstream reports do.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ScoreReport:
    """Scalar and per-class scores for one evaluation."""

    accuracy: float
    per_class_precision: tuple
    per_class_recall: tuple
    per_class_f1: tuple
    macro_precision: float
    macro_recall: float
    macro_f1: float
    minor_ids: tuple
    minor_accuracy: float
    minor_precision: float
    minor_recall: float
    minor_f1: float

    def scalars(self):
        """The eight reported metrics, keyed as in table file names."""
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "minor_accuracy": self.minor_accuracy,
            "minor_precision": self.minor_precision,
            "minor_recall": self.minor_recall,
            "minor_f1": self.minor_f1,
        }

    def to_dict(self):
        """JSON-ready dictionary with scalars and per-class vectors."""
        doc = self.scalars()
        doc["per_class_precision"] = list(self.per_class_precision)
        doc["per_class_recall"] = list(self.per_class_recall)
        doc["per_class_f1"] = list(self.per_class_f1)
        doc["minor_ids"] = list(self.minor_ids)
        return doc


METRIC_NAMES = ("accuracy", "macro_precision", "macro_recall", "macro_f1",
                "minor_accuracy", "minor_precision", "minor_recall", "minor_f1")


def confusion(true_labels, predicted_labels, n_classes):
    """Count matrix with rows = true class, columns = predicted class."""
    t = np.asarray(true_labels, dtype=np.int64).ravel()
    p = np.asarray(predicted_labels, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise DataError("label vectors differ in length")
    if t.size == 0:
        raise DataError("empty label vectors")
    if n_classes < 1:
        raise DataError("n_classes must be positive")
    for name, v in (("true", t), ("predicted", p)):
        if v.min() < 0 or v.max() >= n_classes:
            raise DataError(f"{name} labels out of range [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def score(cm, minor_ids):
    """Macro scores over all classes plus macro scores over the minor set."""
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise DataError("confusion matrix must be square")
    total = int(cm.sum())
    if total < 1:
        raise DataError("confusion matrix is empty")
    n = cm.shape[0]
    minors = tuple(sorted(set(int(i) for i in minor_ids)))
    if minors and (minors[0] < 0 or minors[-1] >= n):
        raise DataError("minor class id out of range")
    tp = np.diag(cm).astype(np.float64)
    pred_totals = cm.sum(axis=0).astype(np.float64)
    true_totals = cm.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, pred_totals, out=np.zeros(n), where=pred_totals > 0)
    recall = np.divide(tp, true_totals, out=np.zeros(n), where=true_totals > 0)
    pr = precision + recall
    f1 = np.divide(2.0 * precision * recall, pr, out=np.zeros(n), where=pr > 0)

    def over(ids, values):
        return float(values[list(ids)].mean()) if ids else 0.0

    return ScoreReport(
        accuracy=float(tp.sum() / total),
        per_class_precision=tuple(precision.tolist()),
        per_class_recall=tuple(recall.tolist()),
        per_class_f1=tuple(f1.tolist()),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        minor_ids=minors,
        # within a class, the correct fraction is exactly its recall
        minor_accuracy=over(minors, recall),
        minor_precision=over(minors, precision),
        minor_recall=over(minors, recall),
        minor_f1=over(minors, f1),
    )
