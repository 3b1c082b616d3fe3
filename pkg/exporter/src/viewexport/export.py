"""Directory-of-images to multi-view feature bundle.

Rows are the lexicographically sorted image filenames, identically in
every exported view, so downstream consumers can align views by row.
Undecodable images are skipped with a warning and listed in the
manifest under "excluded".
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fvb import write_fvb
from .models import ExportError, build_model, extract_features, resolve_architecture

IMAGE_EXTENSIONS = {".bmp", ".gif", ".jpeg", ".jpg", ".png", ".tif", ".tiff", ".webp"}


@dataclass
class ExportSpec:
    image_dir: str
    architectures: list[str]
    out_dir: str
    labels_csv: str | None = None
    batch_size: int = 16
    infos: list = field(init=False)

    def __post_init__(self) -> None:
        if not self.architectures:
            raise ExportError("need at least one architecture")
        self.infos = [resolve_architecture(a) for a in self.architectures]
        seen = set()
        for info in self.infos:
            if info.name in seen:
                raise ExportError("architecture %r listed twice" % info.name)
            seen.add(info.name)
        if not Path(self.image_dir).is_dir():
            raise ExportError("image directory missing: %s" % self.image_dir)
        if self.labels_csv is not None and not Path(self.labels_csv).is_file():
            raise ExportError("labels file missing: %s" % self.labels_csv)
        if self.batch_size < 1:
            raise ExportError("batch_size must be positive")


def scan_images(image_dir) -> tuple[list[Path], list[str]]:
    """Sorted decodable image paths plus the names that failed to decode."""
    from PIL import Image

    candidates = sorted(
        (p for p in Path(image_dir).iterdir()
         if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS),
        key=lambda p: p.name,
    )
    kept, excluded = [], []
    for path in candidates:
        try:
            with Image.open(path) as img:
                img.load()
        except (OSError, ValueError) as exc:
            warnings.warn("skipping undecodable image %s (%s)" % (path.name, exc))
            excluded.append(path.name)
            continue
        kept.append(path)
    return kept, excluded


def read_labels(csv_path, names: list[str]) -> np.ndarray:
    """Map filename -> dense integer label, in the order of `names`.

    The CSV holds "filename,label" rows (header optional).  Every
    exported image must be covered; rows for other files are ignored.
    Labels are densified by sorted distinct value, so they are stable
    across re-exports.
    """
    raw: dict[str, str] = {}
    with open(csv_path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ExportError("labels CSV rows must be 'filename,label', got %r" % (row,))
            name, value = row[0].strip(), row[1].strip()
            if name.lower() == "filename" and value.lower() == "label":
                continue
            if name in raw:
                raise ExportError("duplicate label row for %r" % name)
            raw[name] = value

    missing = [n for n in names if n not in raw]
    if missing:
        raise ExportError("labels CSV misses %d image(s), e.g. %r" % (len(missing), missing[0]))
    classes = sorted({raw[n] for n in names})
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[raw[n]] for n in names], dtype=np.int64)


def export(spec: ExportSpec) -> Path:
    """Write one .fvb per architecture plus the manifest; returns its path."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    files, excluded = scan_images(spec.image_dir)
    if not files:
        raise ExportError("no decodable images in %s" % spec.image_dir)
    names = [p.name for p in files]
    labels = read_labels(spec.labels_csv, names) if spec.labels_csv else None

    entries = []
    for info in spec.infos:
        start = time.perf_counter()
        model, provenance = build_model(info)
        feats = extract_features(model, info, files, spec.batch_size)
        elapsed = time.perf_counter() - start
        fname = info.name + ".fvb"
        write_fvb(out_dir / fname, feats)
        entries.append({
            "file": fname,
            "extractor": info.name,
            "layer": "penultimate",
            "dim": info.feature_dim,
            "extract_seconds": round(elapsed, 3),
            "weights": provenance,
        })

    manifest = {"n": len(files), "views": entries, "sample_ids": "sample_ids.txt"}
    (out_dir / "sample_ids.txt").write_text("\n".join(names) + "\n")
    if labels is not None:
        manifest["labels_file"] = "labels.csv"
        (out_dir / "labels.csv").write_text("\n".join(str(int(v)) for v in labels) + "\n")
    if excluded:
        manifest["excluded"] = excluded

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
