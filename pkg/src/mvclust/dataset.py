"""Multi-view data model and its on-disk interchange format.

A dataset is an ordered collection of "views": dense feature matrices that
describe the same N samples, in the same row order, as produced by different
feature extractors.  Views are stored on disk as .fvb files (32-bit floats)
referenced from a JSON manifest; in memory everything is float64.

.fvb layout: magic b"FVB1", little-endian uint32 N, uint32 d, then N*d
little-endian IEEE-754 32-bit floats, row-major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FVB_MAGIC = b"FVB1"


class DatasetError(ValueError):
    """Raised for malformed view files, manifests, or invariant violations."""


@dataclass
class ViewMatrix:
    """One feature matrix (N samples x d features) from a single extractor."""

    data: np.ndarray
    extractor_name: str = ""
    layer_name: str = ""
    extract_seconds: float | None = None

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise DatasetError("view data must be a 2-D matrix, got ndim=%d" % self.data.ndim)
        n, d = self.data.shape
        if n < 1 or d < 1:
            raise DatasetError("view must have N >= 1 and d >= 1, got shape %r" % (self.data.shape,))
        if not np.isfinite(self.data).all():
            raise DatasetError("NaN or Inf detected in view %r" % self.extractor_name)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class Partition:
    """Cluster assignments over N samples, with labels 0..k-1 all occupied."""

    assignments: np.ndarray
    k: int

    def __post_init__(self) -> None:
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        if self.assignments.ndim != 1 or self.assignments.size == 0:
            raise DatasetError("assignments must be a non-empty 1-D integer vector")
        present = np.unique(self.assignments)
        if present[0] < 0 or present[-1] >= self.k:
            raise DatasetError(
                "labels must lie in [0, %d), got range [%d, %d]" % (self.k, present[0], present[-1])
            )
        if present.size != self.k:
            missing = sorted(set(range(self.k)) - set(present.tolist()))
            raise DatasetError("every label in [0, %d) must occur; missing %r" % (self.k, missing))

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Build a partition from a raw label vector, relabeling to 0..k-1."""
        labels = np.asarray(labels)
        uniq, dense = np.unique(labels, return_inverse=True)
        return cls(assignments=dense.astype(np.int64), k=int(uniq.size))

    @property
    def n(self) -> int:
        return int(self.assignments.size)

    def relabeled(self, permutation) -> "Partition":
        """Apply a label permutation (old label -> new label)."""
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.k)):
            raise DatasetError("permutation must be a bijection on 0..k-1")
        return Partition(assignments=perm[self.assignments], k=self.k)


@dataclass
class MultiViewDataset:
    """M aligned views of one sample set, plus optional ground-truth labels."""

    views: list[ViewMatrix]
    labels: np.ndarray | None = None
    sample_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.views) < 1:
            raise DatasetError("M must be >= 1 (dataset needs at least one view)")
        n = self.views[0].n
        for j, v in enumerate(self.views):
            if v.n != n:
                raise DatasetError(
                    "row-count mismatch: view %d has N=%d, expected N=%d" % (j, v.n, n)
                )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DatasetError("labels length %d does not match N=%d" % (self.labels.size, n))
            _check_contiguous_labels(self.labels)
        if not self.sample_ids:
            self.sample_ids = [str(i) for i in range(n)]
        elif len(self.sample_ids) != n:
            raise DatasetError("sample_ids length %d does not match N=%d" % (len(self.sample_ids), n))

    @property
    def n(self) -> int:
        return self.views[0].n

    @property
    def m(self) -> int:
        return len(self.views)

    def label_partition(self) -> Partition:
        if self.labels is None:
            raise DatasetError("dataset has no ground-truth labels")
        return Partition(assignments=self.labels, k=int(self.labels.max()) + 1)


def _check_contiguous_labels(labels: np.ndarray) -> None:
    present = np.unique(labels)
    if present[0] < 0:
        raise DatasetError("labels must be non-negative, got %d" % present[0])
    if present.size != present[-1] + 1:
        raise DatasetError("labels must be contiguous 0..K-1, got values %r" % present.tolist())


# ---------------------------------------------------------------------------
# .fvb binary view files
# ---------------------------------------------------------------------------

def write_fvb(path, matrix) -> None:
    """Write a 2-D real matrix as 32-bit floats in .fvb layout."""
    a = np.ascontiguousarray(np.asarray(matrix), dtype="<f4")
    if a.ndim != 2:
        raise DatasetError(".fvb files hold 2-D matrices, got ndim=%d" % a.ndim)
    n, d = a.shape
    with open(path, "wb") as fh:
        fh.write(FVB_MAGIC)
        fh.write(struct.pack("<II", n, d))
        fh.write(a.tobytes())


def read_fvb(path) -> np.ndarray:
    """Read an .fvb file into a float64 matrix (values stay exactly f32)."""
    path = Path(path)
    if not path.exists():
        raise DatasetError("view file missing: %s" % path)
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != FVB_MAGIC:
        raise DatasetError("malformed header in %s (expected magic %r)" % (path, FVB_MAGIC))
    n, d = struct.unpack("<II", raw[4:12])
    expected = 12 + 4 * n * d
    if len(raw) != expected:
        raise DatasetError(
            "malformed view file %s: %d bytes, header says %d" % (path, len(raw), expected)
        )
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(n, d)
    return data.astype(np.float64)


# ---------------------------------------------------------------------------
# Manifest load / save
# ---------------------------------------------------------------------------

def load_dataset(manifest_path) -> MultiViewDataset:
    """Load a multi-view dataset from its JSON manifest.

    The manifest references one .fvb file per view plus optional labels
    (CSV, one integer per line) and sample ids (one per line), all relative
    to the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DatasetError("manifest missing: %s" % manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError("manifest is not valid JSON: %s" % exc) from exc
    base = manifest_path.parent

    if "views" not in manifest or not manifest["views"]:
        raise DatasetError("manifest lists no views")
    n = int(manifest.get("n", -1))

    views = []
    for entry in manifest["views"]:
        data = read_fvb(base / entry["file"])
        if n >= 0 and data.shape[0] != n:
            raise DatasetError(
                "row-count mismatch: %s has N=%d, manifest says n=%d"
                % (entry["file"], data.shape[0], n)
            )
        if "dim" in entry and data.shape[1] != int(entry["dim"]):
            raise DatasetError(
                "dim mismatch: %s has d=%d, manifest says dim=%d"
                % (entry["file"], data.shape[1], int(entry["dim"]))
            )
        views.append(
            ViewMatrix(
                data=data,
                extractor_name=entry.get("extractor", ""),
                layer_name=entry.get("layer", ""),
                extract_seconds=entry.get("extract_seconds"),
            )
        )

    labels = None
    if manifest.get("labels_file"):
        labels_path = base / manifest["labels_file"]
        if not labels_path.exists():
            raise DatasetError("labels file missing: %s" % labels_path)
        lines = [ln for ln in labels_path.read_text().splitlines() if ln.strip()]
        labels = np.array([int(ln) for ln in lines], dtype=np.int64)

    sample_ids: list[str] = []
    if manifest.get("sample_ids"):
        ids_path = base / manifest["sample_ids"]
        if not ids_path.exists():
            raise DatasetError("sample_ids file missing: %s" % ids_path)
        sample_ids = [ln for ln in ids_path.read_text().splitlines() if ln != ""]

    return MultiViewDataset(views=views, labels=labels, sample_ids=sample_ids)


def save_dataset(ds: MultiViewDataset, out_dir) -> Path:
    """Write the dataset as .fvb files + manifest.json; returns manifest path.

    Round-trips with load_dataset bit-exactly at 32-bit precision.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for j, view in enumerate(ds.views):
        fname = "view%02d.fvb" % j
        write_fvb(out_dir / fname, view.data)
        entry = {
            "file": fname,
            "extractor": view.extractor_name,
            "layer": view.layer_name,
            "dim": view.dim,
        }
        if view.extract_seconds is not None:
            entry["extract_seconds"] = view.extract_seconds
        entries.append(entry)

    manifest = {"n": ds.n, "views": entries}
    if ds.labels is not None:
        manifest["labels_file"] = "labels.csv"
        (out_dir / "labels.csv").write_text("\n".join(str(int(v)) for v in ds.labels) + "\n")
    manifest["sample_ids"] = "sample_ids.txt"
    (out_dir / "sample_ids.txt").write_text("\n".join(ds.sample_ids) + "\n")

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def concatenate_views(ds: MultiViewDataset) -> ViewMatrix:
    """Stack all views column-wise, preserving view order and row order."""
    data = np.hstack([v.data for v in ds.views])
    name = "+".join(v.extractor_name or ("view%d" % j) for j, v in enumerate(ds.views))
    return ViewMatrix(data=data, extractor_name=name, layer_name="concat")
