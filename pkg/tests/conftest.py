import numpy as np
import pytest

from mvclust.dataset import MultiViewDataset, ViewMatrix, save_dataset
from mvclust.synthetic import make_blobs


def build_blob_dataset(n_per_class=10, k=3, seed=0, extract_seconds=(3.0, 5.0)):
    """Two aligned views of the same line-of-blobs data, with labels.

    View 0 is the raw blobs; view 1 is a fixed rotation of them plus a
    small deterministic perturbation, so the views agree on the clusters
    without being identical.
    """
    centers = np.stack([6.0 * np.arange(k), np.zeros(k)], axis=1)
    x, labels = make_blobs(n_per_class, centers, spread=0.4, seed=seed)
    theta = 0.7
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    rng = np.random.default_rng(seed + 1)
    y = x @ rot.T + 0.05 * rng.standard_normal(x.shape)
    views = [
        ViewMatrix(x, extractor_name="raw", layer_name="l3", extract_seconds=extract_seconds[0]),
        ViewMatrix(y, extractor_name="rotated", layer_name="l3", extract_seconds=extract_seconds[1]),
    ]
    return MultiViewDataset(views=views, labels=labels)


@pytest.fixture
def blob_manifest(tmp_path):
    """Factory writing the two-view blob dataset to disk; returns manifest path."""

    def _build(subdir="data", **kwargs):
        ds = build_blob_dataset(**kwargs)
        return save_dataset(ds, tmp_path / subdir)

    return _build
