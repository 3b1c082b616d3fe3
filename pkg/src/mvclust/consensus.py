"""Ensemble clustering across views via co-association.

Each view is clustered independently; the fraction of views that put two
samples in the same cluster becomes a similarity, and agglomerative
clustering with average linkage on (1 - similarity) yields the consensus
partition.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import AggConfig, agglomerative_from_distances
from .dataset import MultiViewDataset, Partition

DEFAULT_COASSOC_BUDGET = 2 << 30  # 2 GiB of float64 entries


class MemoryGuardError(RuntimeError):
    """Raised instead of attempting an N x N allocation over budget."""


def check_coassociation_budget(n: int, max_bytes: int = DEFAULT_COASSOC_BUDGET) -> None:
    need = n * n * 8
    if need > max_bytes:
        raise MemoryGuardError(
            "co-association for N=%d needs %.2f GiB (budget %.2f GiB)"
            % (n, need / 2**30, max_bytes / 2**30)
        )


def co_association(partitions, max_bytes: int = DEFAULT_COASSOC_BUDGET) -> np.ndarray:
    """Fraction of partitions placing each sample pair in the same cluster.

    Symmetric, unit diagonal, entries in [0,1] and multiples of 1/M for M
    partitions.  Dense N x N float64; the memory guard refuses sizes whose
    matrix would not fit the budget.
    """
    partitions = list(partitions)
    if not partitions:
        raise ValueError("need at least one partition")
    n = partitions[0].n
    for p in partitions:
        if p.n != n:
            raise ValueError("partitions disagree on N: %d vs %d" % (p.n, n))
    check_coassociation_budget(n, max_bytes)

    acc = np.zeros((n, n), dtype=np.float64)
    for p in partitions:
        a = p.assignments
        acc += a[:, None] == a[None, :]
    acc /= len(partitions)
    return acc


def _cluster_one_view(args):
    data, cfg = args
    return cfg.cluster(data)


def cluster_each_view(ds: MultiViewDataset, base: AggConfig, workers: int = 1) -> list[Partition]:
    """Independent base clustering of every view, order-aligned with views.

    workers > 1 fans the views out over processes; results are identical
    either way because each view's job is self-contained.
    """
    jobs = [(v.data, base) for v in ds.views]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cluster_one_view, jobs))
    return [_cluster_one_view(j) for j in jobs]


@dataclass
class MvecResult:
    """Consensus partition plus the evidence it was built from."""

    partition: Partition
    per_view: list[Partition] = field(default_factory=list)
    coassociation: np.ndarray | None = None


def consensus_from_partitions(
    partitions, k: int, max_bytes: int = DEFAULT_COASSOC_BUDGET
) -> MvecResult:
    """Average-linkage agglomerative cut of the co-association distances."""
    partitions = list(partitions)
    coassoc = co_association(partitions, max_bytes)
    dist = 1.0 - coassoc
    np.fill_diagonal(dist, 0.0)
    partition = agglomerative_from_distances(dist, k, "average")
    return MvecResult(partition=partition, per_view=partitions, coassociation=coassoc)


def mvec(
    ds: MultiViewDataset,
    k: int,
    base: AggConfig | None = None,
    workers: int = 1,
    max_bytes: int = DEFAULT_COASSOC_BUDGET,
) -> MvecResult:
    """Multi-view ensemble clustering.

    Clusters each view with the base algorithm (agglomerative, defaulting
    to the same k as the consensus), then cuts the co-association distance
    matrix with average linkage into k clusters.  With a single view this
    reduces exactly to the base algorithm on that view.
    """
    if k > ds.n:
        raise ValueError("k=%d exceeds N=%d" % (k, ds.n))
    if base is None:
        base = AggConfig(k=k)
    check_coassociation_budget(ds.n, max_bytes)
    parts = cluster_each_view(ds, base, workers=workers)
    return consensus_from_partitions(parts, k, max_bytes)
