"""Synthetic dataset generators used by demos and tests."""

from __future__ import annotations

import numpy as np

from .dataset import MultiViewDataset, ViewMatrix


def make_blobs(n_per_class: int, centers, spread: float = 0.3, seed: int = 0):
    """Isotropic Gaussian blobs, one per center row.

    Returns (x, labels) with samples grouped by class in row order.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2:
        raise ValueError("centers must be a 2-D array of blob locations")
    rng = np.random.default_rng(seed)
    k = centers.shape[0]
    labels = np.repeat(np.arange(k), n_per_class)
    x = centers[labels] + spread * rng.standard_normal((k * n_per_class, centers.shape[1]))
    return x, labels


def make_complementary_views(
    n_per_class: int = 25,
    n_classes: int = 4,
    n_views: int = 3,
    spread: float = 0.3,
    seed: int = 0,
) -> MultiViewDataset:
    """Views that are individually ambiguous but jointly sufficient.

    Classes sit on well-separated 2-D anchor points.  In view j the anchor
    of class j+1 is moved onto the anchor of class j, so that one class
    pair becomes indistinguishable in that view while every other class
    stays clean.  Each pair is collapsed in at most one view, so any two
    classes remain separated somewhere and the ensemble can recover the
    full labeling that no single view supports.

    Requires n_views < n_classes so at least one view separates each pair.
    """
    if not 1 <= n_views < n_classes:
        raise ValueError("need 1 <= n_views < n_classes")
    side = int(np.ceil(np.sqrt(n_classes)))
    grid = np.array([[8.0 * (c % side), 8.0 * (c // side)] for c in range(n_classes)])
    labels = np.repeat(np.arange(n_classes), n_per_class)
    rng = np.random.default_rng(seed)

    views = []
    for j in range(n_views):
        anchors = grid.copy()
        anchors[j + 1] = anchors[j]  # class j+1 becomes indistinguishable from j
        pts = anchors[labels] + spread * rng.standard_normal((labels.size, 2))
        views.append(ViewMatrix(pts, extractor_name="view%d" % j, layer_name="synthetic"))
    return MultiViewDataset(views=views, labels=labels)
