"""Matplotlib renderings written alongside the delimited outputs.

Every report path emits tidy CSVs first; these helpers render the same
data to PNG files so a run directory is self-contained.  The CSV columns
stay the contract for external plotting tools.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CLASS_COLORS = ("tab:blue", "tab:red", "black")


def save_training_curves(rows, path) -> None:
    """Accuracy and loss per epoch, one line per split."""
    splits = sorted({r.split for r in rows})
    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(9, 3.5))
    for split in splits:
        sel = [r for r in rows if r.split == split]
        epochs = [r.epoch for r in sel]
        ax_acc.plot(epochs, [r.accuracy for r in sel], marker="o", label=split)
        ax_loss.plot(epochs, [r.loss for r in sel], marker="o", label=split)
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.0)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    for ax in (ax_acc, ax_loss):
        ax.grid(alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spheres_snapshots(results, labels, path) -> None:
    """Grid of 3-D point clouds: one row per variant, one column per layer."""
    n_rows = len(results)
    layer_ids = sorted(results[0].snapshots)
    fig = plt.figure(figsize=(3.0 * len(layer_ids), 3.0 * n_rows))
    for i, result in enumerate(results):
        for j, layer in enumerate(layer_ids):
            ax = fig.add_subplot(n_rows, len(layer_ids),
                                 i * len(layer_ids) + j + 1, projection="3d")
            cloud = result.snapshots[layer]
            for cls in (1, 2, 3):
                sel = labels == cls
                ax.scatter(cloud[sel, 0], cloud[sel, 1], cloud[sel, 2],
                           s=2, color=CLASS_COLORS[cls - 1], alpha=0.5)
            if i == 0:
                ax.set_title(f"layer {layer}", fontsize=9)
            if j == 0:
                ax.text2D(-0.1, 0.5, f"{result.variant} h={result.h:g}",
                          transform=ax.transAxes, rotation=90,
                          va="center", fontsize=9)
            ax.set_xticks([])
            ax.set_yticks([])
            ax.set_zticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectrum(eig_sets: dict[str, np.ndarray], path) -> None:
    """Eigenvalues of each layer's block-circulant matrix in the complex plane."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, eigs in eig_sets.items():
        ax.scatter(eigs.real, eigs.imag, s=8, alpha=0.6, label=name)
    ax.axvline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.grid(alpha=0.3)
    if len(eig_sets) <= 10:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
