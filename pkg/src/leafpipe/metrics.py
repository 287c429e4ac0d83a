"""Classification evaluation: confusion matrix, accuracy, per-class
precision/recall, and CSV export of training history.

Confusion matrix orientation is fixed here and stamped into the CSV header:
rows = true class, columns = predicted class, so the trace counts correct
predictions and row sums are per-class true counts. A class with an empty
precision/recall denominator reports None (an empty CSV cell), never NaN.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """K x K counts of (true class, predicted class) pairs."""

    counts: np.ndarray  # (K, K) int64

    def __post_init__(self):
        c = self.counts
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
            raise ValueError(f"confusion matrix must be square, got {c.shape}")
        if (c < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))


@dataclass(frozen=True)
class EpochRecord:
    """One row of the training history (the four accuracy/loss curves)."""

    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float

    def __post_init__(self):
        for name in ("train_acc", "val_acc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("train_loss", "val_loss"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def confusion(true_labels, predicted_labels, num_classes: int) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a K x K table."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"label vectors must match, got {t.shape} vs {p.shape}")
    if t.size and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def accuracy(cm: ConfusionMatrix) -> float:
    """trace / total."""
    if cm.total < 1:
        raise ValueError("empty confusion matrix")
    return cm.correct / cm.total


def precision(cm: ConfusionMatrix) -> list[float | None]:
    """Per-class cm[k][k] / column sum; None where the class is never predicted."""
    cols = cm.counts.sum(axis=0)
    return [cm.counts[k, k] / cols[k] if cols[k] > 0 else None
            for k in range(cm.num_classes)]


def recall(cm: ConfusionMatrix) -> list[float | None]:
    """Per-class cm[k][k] / row sum; None where the class never occurs."""
    rows = cm.counts.sum(axis=1)
    return [cm.counts[k, k] / rows[k] if rows[k] > 0 else None
            for k in range(cm.num_classes)]


def macro_average(values: list[float | None]) -> float | None:
    """Mean over the defined entries; None if nothing is defined."""
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


def export_history(records: list[EpochRecord], path) -> None:
    """Fixed-format history CSV: header + one 6-decimal row per epoch."""
    if not records:
        raise ValueError("history is empty")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
        for r in records:
            writer.writerow([r.epoch, f"{r.train_loss:.6f}", f"{r.train_acc:.6f}",
                             f"{r.val_loss:.6f}", f"{r.val_acc:.6f}"])


def export_confusion(cm: ConfusionMatrix, class_names: list[str], path) -> None:
    """K x K CSV with class-name header row/column; corner cell states the
    orientation (rows true, columns predicted)."""
    if len(class_names) != cm.num_classes:
        raise ValueError(f"{len(class_names)} names for {cm.num_classes} classes")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\predicted", *class_names])
        for k, name in enumerate(class_names):
            writer.writerow([name, *cm.counts[k].tolist()])
