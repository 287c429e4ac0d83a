"""Figure rendering for training reports: accuracy/loss curves and the
confusion-matrix heatmap, written as PNG files alongside the CSV outputs.

The CSVs remain the machine-readable contract; these plots are the human
view of the same data. Uses the Agg backend so headless runs work.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ConfusionMatrix, EpochRecord


def plot_history(records: list[EpochRecord], path) -> None:
    """Two-panel figure: train/validation accuracy and loss per epoch."""
    if not records:
        raise ValueError("history is empty")
    epochs = [r.epoch for r in records]
    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(10, 4))
    ax_acc.plot(epochs, [r.train_acc for r in records], label="train")
    ax_acc.plot(epochs, [r.val_acc for r in records], label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.02)
    ax_acc.set_title("Accuracy")
    ax_acc.legend()
    ax_loss.plot(epochs, [r.train_loss for r in records], label="train")
    ax_loss.plot(epochs, [r.val_loss for r in records], label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.set_title("Loss")
    ax_loss.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_confusion(cm: ConfusionMatrix, class_names: list[str], path) -> None:
    """Heatmap of counts, rows true / columns predicted; annotated for small K."""
    if len(class_names) != cm.num_classes:
        raise ValueError(f"{len(class_names)} names for {cm.num_classes} classes")
    k = cm.num_classes
    side = max(4.0, 0.5 * k + 2.0)
    fig, ax = plt.subplots(figsize=(side, side))
    im = ax.imshow(cm.counts, cmap="Blues")
    ax.set_xticks(np.arange(k), labels=class_names, rotation=45, ha="right")
    ax.set_yticks(np.arange(k), labels=class_names)
    ax.set_xlabel("predicted class")
    ax.set_ylabel("true class")
    ax.set_title("Confusion matrix")
    if k <= 20:
        threshold = cm.counts.max() / 2 if cm.counts.max() > 0 else 0
        for i in range(k):
            for j in range(k):
                color = "white" if cm.counts[i, j] > threshold else "black"
                ax.text(j, i, str(cm.counts[i, j]), ha="center", va="center",
                        color=color, fontsize=8)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
