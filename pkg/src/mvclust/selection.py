"""Extractor selection from clustering score boards.

A score board holds one aggregate score (typically the NMI/purity/accuracy
mean) per dataset and extractor.  Selection strategies: follow the leader
across datasets excluding a holdout, or best/worst within a single row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import ScoreReport, score_partition


@dataclass
class ScoreBoard:
    """P datasets x M extractors of scores in [0, 1]."""

    scores: np.ndarray
    dataset_names: list[str]
    extractor_names: list[str]

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2:
            raise ValueError("scores must be a 2-D matrix")
        p, m = self.scores.shape
        if len(self.dataset_names) != p or len(self.extractor_names) != m:
            raise ValueError(
                "names must match the score matrix: %d datasets, %d extractors" % (p, m)
            )
        if self.scores.min() < 0.0 or self.scores.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")

    @property
    def n_datasets(self) -> int:
        return self.scores.shape[0]

    @property
    def n_extractors(self) -> int:
        return self.scores.shape[1]

    def dataset_index(self, dataset) -> int:
        if isinstance(dataset, str):
            try:
                return self.dataset_names.index(dataset)
            except ValueError:
                raise ValueError("unknown dataset %r" % dataset) from None
        idx = int(dataset)
        if not 0 <= idx < self.n_datasets:
            raise ValueError("dataset index %d out of range" % idx)
        return idx

    def row(self, dataset) -> np.ndarray:
        return self.scores[self.dataset_index(dataset)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset"] + list(self.extractor_names))
            for name, row in zip(self.dataset_names, self.scores):
                writer.writerow([name] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "ScoreBoard":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ValueError("score board CSV needs a header and at least one row")
        header = rows[0]
        if len(header) < 2 or header[0] != "dataset":
            raise ValueError("first header cell must be 'dataset'")
        extractor_names = header[1:]
        dataset_names = []
        scores = []
        for row in rows[1:]:
            if len(row) != len(header):
                raise ValueError("row %r does not match the header width" % row[:1])
            dataset_names.append(row[0])
            scores.append([float(v) for v in row[1:]])
        return cls(np.array(scores), dataset_names, extractor_names)


def lnet_select(board: ScoreBoard, holdout=None) -> int:
    """Index of the extractor with the best mean score across datasets.

    holdout (index or name) excludes one dataset from the mean, the
    leave-one-out protocol for judging transfer to an unseen dataset.
    Ties break to the lowest index.  Needs at least two datasets.
    """
    if board.n_datasets < 2:
        raise ValueError("need at least two datasets to average over")
    mask = np.ones(board.n_datasets, dtype=bool)
    if holdout is not None:
        mask[board.dataset_index(holdout)] = False
    means = board.scores[mask].mean(axis=0)
    return int(means.argmax())


def bnet_wnet(row) -> tuple[int, int]:
    """(best, worst) extractor indices within one dataset row; ties break
    to the lowest index."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.size == 0:
        raise ValueError("row must be a non-empty vector")
    return int(row.argmax()), int(row.argmin())


def evaluate_run(labels_true, labels_pred) -> ScoreReport:
    """All external metrics for one run, from a single contingency pass."""
    return score_partition(labels_true, labels_pred)
