"""Matplotlib figures written next to the text reports (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .ppm import Palette  # noqa: E402


def diagram_figure(cids: np.ndarray, x0: int, palette: Palette, path, title: str = "") -> None:
    n = int(cids.max()) + 1 if cids.size else 1
    img = palette.lut(n)[cids]
    h, w = cids.shape
    fig, ax = plt.subplots(figsize=(8, 8 * h / max(w, 1) + 0.8))
    ax.imshow(img, interpolation="nearest", extent=(x0 - 0.5, x0 + w - 0.5, h - 0.5, -0.5))
    ax.set_xlabel("cell")
    ax.set_ylabel("time")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def growth_figure(depths, log_counts, dimension: float, k: int, path) -> None:
    depths = np.asarray(depths, dtype=float)
    log_counts = np.asarray(log_counts, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(depths, log_counts, "o", label="non-blank cells")
    ref = log_counts[-1] + dimension * (depths - depths[-1])
    ax.plot(depths, ref, "-", label=f"slope {dimension:.6f}")
    ax.set_xlabel("level n")
    ax.set_ylabel(f"log_{k} count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def hue_figure(weights: dict[int, float], palette: Palette, labels: dict[int, str], path) -> None:
    ids = sorted(weights)
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = [np.array(palette.rgb(c)) / 255 for c in ids]
    ax.bar(range(len(ids)), [weights[c] for c in ids], color=colors, edgecolor="black")
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels([labels.get(c, str(c)) for c in ids], rotation=45 if len(ids) > 6 else 0)
    ax.set_ylabel("weight")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
