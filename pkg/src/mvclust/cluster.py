"""Flat (k-means) and hierarchical (agglomerative) clustering on dense data.

Both engines are deterministic given their inputs and seeds, return
Partition objects with labels ordered by first sample occurrence, and are
written against plain numpy so their behavior is fully pinned down by the
tests in this repository.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Partition

LINKAGES = ("single", "complete", "average", "ward")


@dataclass(frozen=True)
class KMeansConfig:
    """Knobs for the k-means engine; defaults mirror common library practice."""

    k: int
    n_restarts: int = 10
    max_iter: int = 300
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.n_restarts < 1 or self.max_iter < 1:
            raise ValueError("n_restarts and max_iter must be positive")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")

    def cluster(self, x) -> "KMeansResult":
        return kmeans(
            x,
            self.k,
            seed=self.seed,
            n_restarts=self.n_restarts,
            max_iter=self.max_iter,
            tol=self.tol,
        )


@dataclass(frozen=True)
class AggConfig:
    """Knobs for the agglomerative engine."""

    k: int
    linkage: str = "ward"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.linkage not in LINKAGES:
            raise ValueError("unknown linkage %r; pick one of %r" % (self.linkage, LINKAGES))

    def cluster(self, x) -> Partition:
        return agglomerative(x, self.k, self.linkage)


def pairwise_sq_distances(a, b=None) -> np.ndarray:
    """Squared Euclidean distances between rows of a and rows of b.

    Uses the expanded product form for speed; tiny negative values from
    cancellation are clipped to zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = a if b is None else np.asarray(b, dtype=np.float64)
    aa = np.einsum("ij,ij->i", a, a)
    bb = aa if b is a else np.einsum("ij,ij->i", b, b)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    if b is a:
        np.fill_diagonal(d2, 0.0)
    return d2


def _canonical_partition(labels: np.ndarray) -> Partition:
    # relabel so cluster ids follow first occurrence in sample order
    order = {}
    out = np.empty(labels.size, dtype=np.int64)
    for i, lab in enumerate(labels.tolist()):
        if lab not in order:
            order[lab] = len(order)
        out[i] = order[lab]
    return Partition(assignments=out, k=len(order))


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------

@dataclass
class KMeansResult:
    """Winning restart of a k-means run."""

    partition: Partition
    centers: np.ndarray
    inertia: float
    inertia_trace: np.ndarray
    n_iter: int


def kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Spread-out seeding: first center uniform, then proportional to the
    squared distance to the nearest center already chosen.

    Returns the indices of the chosen rows; indices are always distinct,
    and already-chosen rows carry zero probability so duplicate coordinates
    are avoided whenever enough distinct points exist.
    """
    n = x.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = pairwise_sq_distances(x, x[chosen[0]][None, :])[:, 0]
    for t in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            # all remaining points coincide with chosen centers
            mask = np.ones(n, dtype=bool)
            mask[chosen[:t]] = False
            idx = rng.choice(np.flatnonzero(mask))
        chosen[t] = idx
        d2 = np.minimum(d2, pairwise_sq_distances(x, x[idx][None, :])[:, 0])
    return chosen


def _lloyd(x, k, rng, max_iter, tol_abs):
    n = x.shape[0]
    centers = x[kmeans_pp_init(x, k, rng)].copy()
    rows = np.arange(n)

    def assign():
        d2 = pairwise_sq_distances(x, centers)
        return d2.argmin(axis=1), d2

    def repair(labels, d2):
        # hand the point farthest from its center to each empty slot;
        # the moved point's cost drops to zero, so inertia never rises
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            contrib = d2[rows, labels].copy()
            contrib[counts[labels] <= 1] = -1.0  # never empty another cluster
            far = int(contrib.argmax())
            counts[labels[far]] -= 1
            labels[far] = empty
            counts[empty] = 1
            centers[empty] = x[far]
            d2[:, empty] = pairwise_sq_distances(x, x[far][None, :])[:, 0]

    labels, d2 = assign()
    repair(labels, d2)
    trace = [float(d2[rows, labels].sum())]
    n_iter = 0
    for _ in range(max_iter):
        new_centers = np.empty_like(centers)
        for j in range(k):
            new_centers[j] = x[labels == j].mean(axis=0)
        shift = float(((new_centers - centers) ** 2).sum())
        centers = new_centers
        labels, d2 = assign()
        repair(labels, d2)
        trace.append(float(d2[rows, labels].sum()))
        n_iter += 1
        if shift <= tol_abs:
            break
    return labels, centers, trace, n_iter


def kmeans(
    x,
    k: int,
    *,
    seed: int = 0,
    n_restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-4,
) -> KMeansResult:
    """Full k-means: spread-out seeding plus center/assign iterations.

    Runs n_restarts independent seedings and keeps the restart with the
    lowest inertia (first one on ties, so results are reproducible).  tol
    is relative to the mean per-feature variance of x and bounds the total
    squared center movement between consecutive iterations.

    The inertia_trace of the winning restart holds the inertia after the
    initial assignment and after every iteration; it never increases.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be 2-D")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, %d], got %d" % (n, k))
    tol_abs = float(tol) * float(x.var(axis=0).mean())

    seeds = np.random.SeedSequence(seed).spawn(n_restarts)
    best = None
    for ss in seeds:
        labels, centers, trace, n_iter = _lloyd(x, k, np.random.default_rng(ss), max_iter, tol_abs)
        inertia = trace[-1]
        if best is None or inertia < best[0]:
            best = (inertia, labels, centers, trace, n_iter)

    inertia, labels, centers, trace, n_iter = best
    return KMeansResult(
        partition=_canonical_partition(labels),
        centers=centers,
        inertia=inertia,
        inertia_trace=np.asarray(trace),
        n_iter=n_iter,
    )


# ---------------------------------------------------------------------------
# agglomerative
# ---------------------------------------------------------------------------

def _merge_distance(linkage, d_ac, d_bc, d_ab, na, nb, nc):
    """Distance from a freshly merged pair (a, b) to every other cluster c,
    written as a recurrence over the previous distances (vectorized in c)."""
    if linkage == "single":
        return np.minimum(d_ac, d_bc)
    if linkage == "complete":
        return np.maximum(d_ac, d_bc)
    if linkage == "average":
        return (na * d_ac + nb * d_bc) / (na + nb)
    # ward operates on squared Euclidean distances
    s = na + nb + nc
    return ((na + nc) * d_ac + (nb + nc) * d_bc - nc * d_ab) / s


def agglomerative_from_distances(dist, k: int, linkage: str = "average", return_heights: bool = False):
    """Merge clusters bottom-up from a precomputed distance matrix.

    At every step the pair at minimum inter-cluster distance merges; on
    exact ties the pair with the lexicographically smallest slot indices
    wins, and the merged cluster keeps the smaller slot, so a slot always
    equals the smallest original sample index it contains.  Stops at k
    clusters.

    For the ward linkage, dist must contain squared Euclidean distances;
    the other linkages take the matrix at face value (any dissimilarity).

    A nearest-neighbor cache with lazy revalidation keeps the scan per
    merge near linear, which is what makes datasets in the thousands of
    samples practical.

    With return_heights=True also returns the merge distances, one per
    merge in order; the supported linkages never let a merge undercut an
    earlier one, so the sequence is non-decreasing.
    """
    if linkage not in LINKAGES:
        raise ValueError("unknown linkage %r; pick one of %r" % (linkage, LINKAGES))
    d = np.array(dist, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    n = d.shape[0]
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, %d], got %d" % (n, k))
    if not np.allclose(d, d.T, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if (np.diagonal(d) != 0).any():
        raise ValueError("distance matrix must have a zero diagonal")
    if (d < 0).any():
        raise ValueError("distances must be non-negative")

    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    members: list[list[int] | None] = [[i] for i in range(n)]
    np.fill_diagonal(d, np.inf)

    # nn_dist[i] lower-bounds the distance from slot i to any active slot
    # j > i; exact[i] says the bound is attained at nn_idx[i].  All four
    # linkages only ever raise a third cluster's distance relative to the
    # smaller of the two merged ones, so old bounds stay valid after merges.
    nn_dist = np.full(n, np.inf)
    nn_idx = np.full(n, -1, dtype=np.int64)
    exact = np.zeros(n, dtype=bool)

    def rescan(i):
        row = d[i, i + 1 :]
        j = int(row.argmin())
        nn_dist[i] = row[j]
        nn_idx[i] = i + 1 + j
        exact[i] = True

    for i in range(n - 1):
        rescan(i)

    heights = []
    for _ in range(n - k):
        while True:
            a = int(nn_dist.argmin())
            if exact[a]:
                break
            rescan(a)
        b = int(nn_idx[a])
        d_ab = d[a, b]
        heights.append(float(d_ab))

        idx = np.flatnonzero(active)
        idx = idx[(idx != a) & (idx != b)]
        new = _merge_distance(linkage, d[a, idx], d[b, idx], d_ab, sizes[a], sizes[b], sizes[idx])

        d[a, idx] = new
        d[idx, a] = new
        d[b, :] = np.inf
        d[:, b] = np.inf
        active[b] = False
        sizes[a] += sizes[b]
        members[a].extend(members[b])  # type: ignore[union-attr]
        members[b] = None
        nn_dist[b] = np.inf
        exact[b] = False

        # invalidate rows pointing at a slot whose distances changed,
        # then absorb the fresh distances where they beat the old bound
        stale = active & ((nn_idx == a) | (nn_idx == b))
        exact[stale] = False
        low = idx[idx < a]
        vals = d[low, a]
        better = vals < nn_dist[low]
        rows = low[better]
        nn_dist[rows] = vals[better]
        nn_idx[rows] = a
        exact[rows] = True
        if a < n - 1:
            rescan(a)

    labels = np.empty(n, dtype=np.int64)
    for slot in np.flatnonzero(active):
        labels[members[slot]] = slot
    partition = _canonical_partition(labels)
    if return_heights:
        return partition, np.asarray(heights)
    return partition


def agglomerative(x, k: int, linkage: str = "average", return_heights: bool = False):
    """Agglomerative clustering of feature rows under Euclidean geometry.

    single/complete/average merge on plain Euclidean distances; ward on
    squared ones (its merge cost tracks the within-cluster variance
    increase).  See agglomerative_from_distances for tie handling.
    """
    if linkage not in LINKAGES:
        raise ValueError("unknown linkage %r; pick one of %r" % (linkage, LINKAGES))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be 2-D")
    d = pairwise_sq_distances(x)
    if linkage != "ward":
        np.sqrt(d, out=d)
    return agglomerative_from_distances(d, k, linkage, return_heights=return_heights)
