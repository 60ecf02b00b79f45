"""Balanced-accuracy metrics and per-dataset report rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import MissingClass, ShapeMismatch


def confusion_counts(preds, truths, n_classes=2):
    preds = np.asarray(preds, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if preds.shape != truths.shape:
        raise ShapeMismatch(f"{preds.shape} predictions vs {truths.shape} truths")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(truths, preds):
        counts[t, p] += 1
    return counts


def balanced_accuracy(preds, truths, n_classes=2, strict=True):
    """Mean of per-class recalls.

    strict=True (the public contract) demands every class present in the
    truths; strict=False averages recall over the classes that are present,
    which the training loop uses for its per-epoch crop statistic.
    """
    counts = confusion_counts(preds, truths, n_classes)
    support = counts.sum(axis=1)
    if strict and (support == 0).any():
        missing = np.flatnonzero(support == 0).tolist()
        raise MissingClass(f"classes {missing} absent from the ground truth")
    present = support > 0
    if not present.any():
        raise MissingClass("no ground-truth labels at all")
    recalls = counts[present, present] / support[present]
    return float(recalls.mean())


@dataclass
class MetricsReport:
    dataset_tag: str
    n_recordings: int
    bac: float
    per_class_recall: list
    confusion: list
    bac_std: float | None = None

    @staticmethod
    def from_predictions(dataset_tag, preds, truths):
        counts = confusion_counts(preds, truths)
        support = counts.sum(axis=1)
        recalls = [float(counts[i, i] / support[i]) if support[i] else float("nan")
                   for i in range(counts.shape[0])]
        return MetricsReport(
            dataset_tag=dataset_tag,
            n_recordings=int(support.sum()),
            bac=balanced_accuracy(preds, truths, strict=False),
            per_class_recall=recalls,
            confusion=counts.tolist(),
        )

    def to_dict(self):
        return {
            "dataset_tag": self.dataset_tag,
            "n_recordings": self.n_recordings,
            "bac": self.bac,
            "bac_std": self.bac_std,
            "per_class_recall": self.per_class_recall,
            "confusion": self.confusion,
        }


def mean_and_std(values):
    values = np.asarray(values, dtype=np.float64)
    return float(values.mean()), float(values.std(ddof=1)) if len(values) > 1 else 0.0


def standard_error(values):
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(len(values)))
