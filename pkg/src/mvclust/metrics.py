"""External clustering validation metrics.

All metrics compare a predicted partition against ground-truth classes and
are symmetric in sample order.  Shannon quantities use natural logarithms.
Pair-counting scores come in a global form and a per-sample local form whose
sum ties back to the global true-positive pair count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


def _as_label_vector(labels) -> np.ndarray:
    # accept Partition-like objects or raw sequences
    if hasattr(labels, "assignments"):
        labels = labels.assignments
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("labels must be a non-empty 1-D vector")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.array_equal(arr, arr.astype(np.int64)):
            raise ValueError("labels must be integers")
        arr = arr.astype(np.int64)
    return arr.astype(np.int64)


def contingency_table(labels_true, labels_pred) -> np.ndarray:
    """Count matrix T[y, c] = |class y intersect cluster c|.

    Labels are densified first, so rows/columns cover exactly the values
    that occur.
    """
    y = _as_label_vector(labels_true)
    c = _as_label_vector(labels_pred)
    if y.size != c.size:
        raise ValueError("label vectors differ in length: %d vs %d" % (y.size, c.size))
    _, yi = np.unique(y, return_inverse=True)
    _, ci = np.unique(c, return_inverse=True)
    ky = int(yi.max()) + 1
    kc = int(ci.max()) + 1
    table = np.zeros((ky, kc), dtype=np.int64)
    np.add.at(table, (yi, ci), 1)
    return table


def nmi(labels_true, labels_pred) -> float:
    """Normalized mutual information: 2 I(Y;C) / (H(Y) + H(C)).

    Natural logarithms throughout.  Two trivial one-block partitions have
    zero entropy on both sides and score 1.0 by convention.
    """
    table = contingency_table(labels_true, labels_pred)
    n = table.sum()
    py = table.sum(axis=1) / n
    pc = table.sum(axis=0) / n
    h_y = float(-np.sum(py * np.log(py, where=py > 0, out=np.zeros_like(py))))
    h_c = float(-np.sum(pc * np.log(pc, where=pc > 0, out=np.zeros_like(pc))))
    if h_y + h_c == 0.0:
        return 1.0
    p_joint = table / n
    outer = np.outer(py, pc)
    nz = p_joint > 0
    info = float(np.sum(p_joint[nz] * np.log(p_joint[nz] / outer[nz])))
    return 2.0 * info / (h_y + h_c)


def purity(labels_true, labels_pred) -> float:
    """Fraction of samples belonging to their cluster's majority class."""
    table = contingency_table(labels_true, labels_pred)
    return float(table.max(axis=0).sum() / table.sum())


def accuracy(labels_true, labels_pred) -> float:
    """Clustering accuracy under the best one-to-one cluster/class matching.

    The matching maximizes the total count over the contingency table
    (rectangular tables are fine; unmatched labels contribute nothing).
    """
    table = contingency_table(labels_true, labels_pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def _pair_counts(table: np.ndarray) -> tuple[float, float, float]:
    # counts of sample pairs: together in both / in a cluster / in a class
    def comb2(v):
        v = v.astype(np.float64)
        return float(np.sum(v * (v - 1.0) / 2.0))

    tp = comb2(table.ravel())
    same_cluster = comb2(table.sum(axis=0))
    same_class = comb2(table.sum(axis=1))
    return tp, same_cluster, same_class


def fmi(labels_true, labels_pred) -> float:
    """Pairwise score TP / sqrt((TP+FP)(TP+FN)) over all sample pairs.

    TP counts pairs together in both partitions, TP+FP pairs sharing a
    cluster, TP+FN pairs sharing a class.  Zero when either partition has
    no co-clustered pair at all.
    """
    tp, same_cluster, same_class = _pair_counts(contingency_table(labels_true, labels_pred))
    if same_cluster == 0.0 or same_class == 0.0:
        return 0.0
    return tp / np.sqrt(same_cluster * same_class)


def fmi_local(labels_true, labels_pred) -> np.ndarray:
    """Per-sample pairwise score; vector of length N.

    For sample i with class y and cluster c the pair counts restricted to
    pairs containing i are n_yc - 1 true positives, n_.c - 1 co-clustered
    and n_y. - 1 co-classed, giving
    (n_yc - 1) / sqrt((n_.c - 1)(n_y. - 1)).  Samples alone in their class
    or cluster score 0.  Summing the per-sample true positives double
    counts each pair, so the vector ties back to the global count.
    """
    y = _as_label_vector(labels_true)
    c = _as_label_vector(labels_pred)
    if y.size != c.size:
        raise ValueError("label vectors differ in length: %d vs %d" % (y.size, c.size))
    _, yi = np.unique(y, return_inverse=True)
    _, ci = np.unique(c, return_inverse=True)
    table = np.zeros((int(yi.max()) + 1, int(ci.max()) + 1), dtype=np.int64)
    np.add.at(table, (yi, ci), 1)

    n_yc = table[yi, ci].astype(np.float64)
    n_cluster = table.sum(axis=0)[ci].astype(np.float64)
    n_class = table.sum(axis=1)[yi].astype(np.float64)
    denom = (n_cluster - 1.0) * (n_class - 1.0)
    out = np.zeros(y.size, dtype=np.float64)
    ok = denom > 0
    out[ok] = (n_yc[ok] - 1.0) / np.sqrt(denom[ok])
    return out


def fm_per_class(labels_true, labels_pred) -> np.ndarray:
    """Mean local pairwise score within each true class.

    Returns one value per distinct class, ordered by ascending class label.
    Low values flag classes the clustering tears apart even when global
    scores look good.
    """
    y = _as_label_vector(labels_true)
    local = fmi_local(labels_true, labels_pred)
    classes = np.unique(y)
    return np.array([local[y == cls].mean() for cls in classes])


def mix_score(labels_true, labels_pred) -> float:
    """Mean of NMI, purity and accuracy; the single selection criterion."""
    return (
        nmi(labels_true, labels_pred)
        + purity(labels_true, labels_pred)
        + accuracy(labels_true, labels_pred)
    ) / 3.0


@dataclass(frozen=True)
class ScoreReport:
    """All global scores for one (truth, prediction) pair."""

    nmi: float
    purity: float
    accuracy: float
    fmi: float
    mix: float

    def as_dict(self) -> dict[str, float]:
        """Full-precision dict with the report's wire keys."""
        return {
            "nmi": self.nmi,
            "pur": self.purity,
            "acc": self.accuracy,
            "fmi": self.fmi,
            "mix": self.mix,
        }

    def rounded(self, ndigits: int = 4) -> dict[str, float]:
        """Presentation form used in report files."""
        return {key: round(val, ndigits) for key, val in self.as_dict().items()}


def score_partition(labels_true, labels_pred) -> ScoreReport:
    """Evaluate a predicted partition against ground truth on all metrics."""
    n = nmi(labels_true, labels_pred)
    p = purity(labels_true, labels_pred)
    a = accuracy(labels_true, labels_pred)
    f = fmi(labels_true, labels_pred)
    return ScoreReport(nmi=n, purity=p, accuracy=a, fmi=f, mix=(n + p + a) / 3.0)
