"""Report figures as self-contained SVG files.

Built on matplotlib's object-oriented API (no pyplot, no GUI backend) so
figures render identically in headless environments.  Fonts are embedded
as paths, so the SVGs carry no external references.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

matplotlib.rcParams["svg.fonttype"] = "path"

METRIC_ORDER = ("nmi", "pur", "acc", "fmi", "mix")


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight")
    return path


def save_metric_bars(reports: dict[str, dict], path) -> Path:
    """Grouped bar chart: one group per metric, one bar per method.

    reports maps a method label to its metrics dict (wire keys nmi, pur,
    acc, fmi, mix; missing keys are drawn as zero-height bars).
    """
    if not reports:
        raise ValueError("no metric reports to plot")
    labels = list(reports)
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot(111)
    positions = np.arange(len(METRIC_ORDER), dtype=np.float64)
    width = 0.8 / len(labels)
    for i, label in enumerate(labels):
        values = [float(reports[label].get(m, 0.0)) for m in METRIC_ORDER]
        ax.bar(positions + i * width, values, width=width, label=label)
    ax.set_xticks(positions + 0.4 - width / 2)
    ax.set_xticklabels([m.upper() for m in METRIC_ORDER])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.legend(fontsize="small")
    return _save(fig, path)


def save_trace_chart(trace: list[dict], path) -> Path:
    """Cluster count and training loss over the merge/train periods.

    Expects trace entries with "t" and "k"; "mean_loss" and "nmi" are
    drawn when present.
    """
    entries = [e for e in trace if "k" in e]
    if not entries:
        raise ValueError("trace has no cluster-count entries to plot")
    steps = [e.get("t", i) for i, e in enumerate(entries)]
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot(111)
    ax.step(steps, [e["k"] for e in entries], where="post", color="tab:blue", label="clusters")
    ax.set_xlabel("period")
    ax.set_ylabel("clusters", color="tab:blue")
    losses = [(s, e["mean_loss"]) for s, e in zip(steps, entries) if "mean_loss" in e]
    if losses:
        ax2 = ax.twinx()
        ax2.plot(*zip(*losses), color="tab:red", marker="o", markersize=3, label="mean loss")
        ax2.set_ylabel("mean loss", color="tab:red")
    nmis = [(s, e["nmi"]) for s, e in zip(steps, entries) if "nmi" in e]
    if nmis:
        ax.plot(
            *zip(*nmis), color="tab:green", linestyle="--", label="NMI vs labels", scalex=False
        )
        ax.legend(fontsize="small", loc="center right")
    return _save(fig, path)


def pca_2d(x) -> np.ndarray:
    """Project onto the top-2 principal axes via covariance eigenvectors.

    Deterministic: ties and sign ambiguity are fixed by forcing the
    largest-magnitude loading of each axis positive.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:2]
    axes = eigvecs[:, order]
    if axes.shape[1] < 2:
        axes = np.hstack([axes, np.zeros((axes.shape[0], 2 - axes.shape[1]))])
    for j in range(axes.shape[1]):
        pivot = np.argmax(np.abs(axes[:, j]))
        if axes[pivot, j] < 0:
            axes[:, j] = -axes[:, j]
    return centered @ axes


def save_pca_scatter(x, path, labels=None) -> Path:
    """2-D PCA scatter of a representation, colored by labels when given."""
    coords = pca_2d(x)
    fig = Figure(figsize=(5.5, 5))
    ax = fig.add_subplot(111)
    if labels is None:
        ax.scatter(coords[:, 0], coords[:, 1], s=12, color="tab:blue")
    else:
        labels = np.asarray(labels)
        if labels.shape[0] != coords.shape[0]:
            raise ValueError("labels length does not match the matrix rows")
        for value in np.unique(labels):
            mask = labels == value
            ax.scatter(coords[mask, 0], coords[mask, 1], s=12, label=str(value))
        ax.legend(fontsize="small", title="class")
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    return _save(fig, path)
