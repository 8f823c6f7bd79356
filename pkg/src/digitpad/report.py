"""Training/evaluation reports: delimited output plus rendered figures.

Every report artifact comes in pairs: the CSV carries the numbers, the PNG
next to it shows them.  Figures render off-screen (Agg), so reports work in
headless runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .bilstm import ConfusionMatrix


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "train_acc", "val_acc"])
        for row in history:
            writer.writerow([row["epoch"], f"{row['loss']:.6f}",
                             f"{row['train_acc']:.6f}", f"{row['val_acc']:.6f}"])


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + [str(d) for d in range(10)])
        for digit, row in enumerate(cm.counts):
            writer.writerow([str(digit)] + [str(int(v)) for v in row])


def plot_history(history, path) -> None:
    epochs = [row["epoch"] for row in history]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(10, 4))
    ax_loss.plot(epochs, [row["loss"] for row in history], color="tab:red")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("training loss")
    ax_loss.grid(alpha=0.3)
    ax_acc.plot(epochs, [row["train_acc"] for row in history], label="train")
    ax_acc.plot(epochs, [row["val_acc"] for row in history], label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.02)
    ax_acc.grid(alpha=0.3)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_confusion(cm: ConfusionMatrix, path) -> None:
    counts = cm.counts
    fig, ax = plt.subplots(figsize=(6, 5.5))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(10))
    ax.set_yticks(range(10))
    ax.set_xlabel("predicted digit")
    ax.set_ylabel("true digit")
    threshold = counts.max() * 0.6 if counts.max() else 1
    for i in range(10):
        for j in range(10):
            if counts[i, j]:
                ax.text(j, i, str(int(counts[i, j])), ha="center", va="center",
                        fontsize=8, color="white" if counts[i, j] > threshold else "black")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(f"accuracy {cm.accuracy():.4f} (n={cm.total()})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(out_dir, history=None, cm: ConfusionMatrix | None = None) -> list:
    """Write whichever artifacts are available; returns the paths created."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created = []
    if history:
        write_history_csv(history, out_dir / "history.csv")
        plot_history(history, out_dir / "history.png")
        created += [out_dir / "history.csv", out_dir / "history.png"]
    if cm is not None:
        write_confusion_csv(cm, out_dir / "confusion.csv")
        plot_confusion(cm, out_dir / "confusion.png")
        created += [out_dir / "confusion.csv", out_dir / "confusion.png"]
    return created
