import numpy as np
import pytest

from leafpipe.metrics import EpochRecord, confusion
from leafpipe.report import plot_confusion, plot_history

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def history(n=10):
    return [EpochRecord(epoch=i, train_loss=1.0 / (i + 1), train_acc=i / n,
                        val_loss=1.2 / (i + 1), val_acc=i / (n + 1))
            for i in range(n)]


def test_plot_history_writes_png(tmp_path):
    path = tmp_path / "history.png"
    plot_history(history(), path)
    assert path.read_bytes().startswith(PNG_MAGIC)
    assert path.stat().st_size > 1000


def test_plot_history_empty_rejected(tmp_path):
    with pytest.raises(ValueError):
        plot_history([], tmp_path / "h.png")


def test_plot_confusion_small(tmp_path):
    rs = np.random.RandomState(0)
    cm = confusion(rs.randint(0, 4, 50), rs.randint(0, 4, 50), 4)
    path = tmp_path / "cm.png"
    plot_confusion(cm, [f"class{i}" for i in range(4)], path)
    assert path.read_bytes().startswith(PNG_MAGIC)


def test_plot_confusion_k15(tmp_path):
    rs = np.random.RandomState(1)
    cm = confusion(rs.randint(0, 15, 200), rs.randint(0, 15, 200), 15)
    path = tmp_path / "cm15.png"
    plot_confusion(cm, [f"d{i:02d}" for i in range(15)], path)
    assert path.read_bytes().startswith(PNG_MAGIC)


def test_plot_confusion_name_mismatch(tmp_path):
    cm = confusion([0, 1], [0, 1], 2)
    with pytest.raises(ValueError):
        plot_confusion(cm, ["only_one"], tmp_path / "x.png")
