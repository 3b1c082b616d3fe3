"""Deep clustering by alternating optimization.

Start from many small clusters (connected components of the 1-NN graph),
then repeat: train the network to predict the current pseudo-labels, map
the data into the fresh latent space, and merge the most affine cluster
pairs until the cluster count hits its shrink target.  Stop at the target
count, optionally fine-tuning once more on the final labels.

Three multi-view variants build on the same loop: concatenating views
before clustering, pretraining one branch per view and then training only
a head on the frozen concatenated branch latents, and a full end-to-end
pass over all weights.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cluster import agglomerative, pairwise_sq_distances
from .dataset import MultiViewDataset, Partition
from .metrics import nmi
from .neural import MlpModel, MVnetModel, TrainConfig, Trainer

DMVC_VARIANTS = ("cc", "mvnet_fix", "mvnet")


@dataclass(frozen=True)
class JuleConfig:
    """Settings for the alternating train/merge loop."""

    k_target: int
    shrink_factor: float = 0.9
    # Kept small on purpose: long training between merges lets the latent
    # space over-commit to the current pseudo-labels, and a single wrong
    # merge made in such a latent is irreversible.
    epochs_per_period: int = 5
    knn_affinity: int = 5
    final_fine_tune: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if self.k_target < 1:
            raise ValueError("k_target must be positive")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("shrink_factor must lie in (0, 1)")
        if self.epochs_per_period < 1:
            raise ValueError("epochs_per_period must be positive")
        if self.knn_affinity < 1:
            raise ValueError("knn_affinity must be positive")


@dataclass
class JuleResult:
    """Final partition plus the artifacts behind it."""

    partition: Partition
    latent: np.ndarray
    model: object
    trace: list[dict] = field(default_factory=list)


def init_clusters(x) -> Partition:
    """Tiny seed clusters: connected components of the 1-NN graph.

    Every sample is linked to its nearest neighbor (Euclidean, ties to the
    lowest index) and links are treated as undirected; each component
    becomes one cluster.  Components are small in generic data, typically
    a handful of samples.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    d2 = pairwise_sq_distances(x)
    np.fill_diagonal(d2, np.inf)
    nn = d2.argmin(axis=1)

    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in enumerate(nn):
        ri, rj = find(i), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    labels = np.array([find(i) for i in range(n)])
    return Partition.from_labels(labels)


def _kth_nn_bandwidth(d2: np.ndarray, ks: int) -> float:
    """Mean squared distance to the ks-th nearest other point."""
    n = d2.shape[0]
    k = min(ks, n - 1)
    work = d2.copy()
    np.fill_diagonal(work, np.inf)
    kth = np.partition(work, k - 1, axis=1)[:, k - 1]
    sigma2 = float(kth.mean())
    if not sigma2 > 0.0:
        sigma2 = 1.0  # all points identical; any bandwidth gives equal affinities
    return sigma2


def _one_sided_affinity(d2_block: np.ndarray, sigma2: float, ks: int) -> float:
    # rows index the source cluster, columns the target cluster
    k = min(ks, d2_block.shape[1])
    nearest = np.partition(d2_block, k - 1, axis=1)[:, :k]
    return float(np.exp(-nearest / sigma2).mean(axis=1).mean())


def merge_partition(
    latent, partition: Partition, target_k: int, knn_affinity: int = 5
) -> Partition:
    """Greedily merge the most affine cluster pairs down to target_k.

    Pair affinity is the symmetrized mean Gaussian-kernel similarity of
    each member to its knn_affinity nearest points inside the other
    cluster; the kernel bandwidth is the mean squared distance to the
    knn_affinity-th nearest neighbor over all points, frozen for the whole
    call.  Ties break to the lexicographically smallest pair of cluster
    slots (slot = smallest member index).  Affinities are cached and only
    pairs touching the merged cluster are recomputed.
    """
    if not 1 <= target_k < partition.k:
        raise ValueError("target_k must lie in [1, %d)" % partition.k)
    z = np.asarray(latent, dtype=np.float64)
    if z.shape[0] != partition.n:
        raise ValueError("latent rows must match partition length")
    d2 = pairwise_sq_distances(z)
    sigma2 = _kth_nn_bandwidth(d2, knn_affinity)

    groups = {}
    for i, lab in enumerate(partition.assignments.tolist()):
        groups.setdefault(lab, []).append(i)
    # slot = smallest member index, mirroring the hierarchical engine
    clusters = {min(m): np.array(m) for m in groups.values()}

    def affinity(a, b):
        block = d2[np.ix_(clusters[a], clusters[b])]
        return 0.5 * (
            _one_sided_affinity(block, sigma2, knn_affinity)
            + _one_sided_affinity(block.T, sigma2, knn_affinity)
        )

    slots = sorted(clusters)
    aff = {}
    for i, a in enumerate(slots):
        for b in slots[i + 1 :]:
            aff[(a, b)] = affinity(a, b)

    while len(clusters) > target_k:
        best = max(aff.items(), key=lambda kv: (kv[1], (-kv[0][0], -kv[0][1])))
        a, b = best[0]
        clusters[a] = np.sort(np.concatenate([clusters[a], clusters[b]]))
        del clusters[b]
        for pair in [p for p in aff if a in p or b in p]:
            del aff[pair]
        for c in clusters:
            if c != a:
                aff[(min(a, c), max(a, c))] = affinity(a, c)

    labels = np.empty(partition.n, dtype=np.int64)
    for slot, members in clusters.items():
        labels[members] = slot
    return Partition.from_labels(labels)


def _shrink(k: int, k_target: int, eta: float) -> int:
    # guarantee progress: the bare ceiling stalls for small k (ceil(0.9*9)=9)
    return max(k_target, min(k - 1, int(np.ceil(eta * k))))


def run_jule(
    x,
    cfg: JuleConfig,
    model=None,
    initial: Partition | None = None,
    labels=None,
) -> JuleResult:
    """Alternating train/merge loop on one input matrix (or view list).

    x is a feature matrix for an MLP model or a list of aligned view
    matrices for a multi-branch model.  The cluster count shrinks
    geometrically (at least one merge per period) until it reaches
    cfg.k_target exactly.  When the seed clustering starts below the
    target, falls back to an agglomerative cut at 4x the target.  labels,
    when given, only enrich the per-period trace with an agreement score.
    """
    multi = isinstance(x, list)
    views = [np.asarray(v, dtype=np.float64) for v in x] if multi else None
    data = views if multi else np.asarray(x, dtype=np.float64)
    n = data[0].shape[0] if multi else data.shape[0]

    if model is None:
        if multi:
            raise ValueError("multi-view input needs an explicit model")
        model = MlpModel([data.shape[1], 160, 160]).xavier_init(cfg.train.seed)

    if initial is None:
        seed_space = np.hstack(views) if multi else data
        current = init_clusters(seed_space)
    else:
        if initial.n != n:
            raise ValueError("initial partition length must match the data")
        current = initial
    if current.k < cfg.k_target:
        warnings.warn(
            "seed clustering produced %d clusters, below the target %d; "
            "falling back to an agglomerative cut" % (current.k, cfg.k_target)
        )
        fallback_k = min(4 * cfg.k_target, n)
        seed_space = np.hstack(views) if multi else data
        current = agglomerative(seed_space, fallback_k)

    trainer = Trainer(model, current.k, cfg.train)
    trace: list[dict] = []
    t = 0

    def record(k_now, losses):
        entry = {"t": t, "k": k_now, "mean_loss": float(np.mean(losses))}
        if labels is not None:
            entry["nmi"] = nmi(labels, current)
        trace.append(entry)

    while current.k > cfg.k_target:
        losses = trainer.run_epochs(data, current.assignments, cfg.epochs_per_period)
        latent = model.forward(data)
        k_next = _shrink(current.k, cfg.k_target, cfg.shrink_factor)
        current = merge_partition(latent, current, k_next, cfg.knn_affinity)
        record(k_next, losses)
        trainer.reset_classifier(k_next)
        t += 1

    if cfg.final_fine_tune:
        losses = trainer.run_epochs(data, current.assignments, cfg.epochs_per_period)
        record(current.k, losses)

    latent = model.forward(data)
    return JuleResult(partition=current, latent=latent, model=model, trace=trace)


# ---------------------------------------------------------------------------
# multi-view variants
# ---------------------------------------------------------------------------

def _branch_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _pretrain_branch(args):
    data, cfg, seed = args
    branch_cfg = replace(cfg, train=replace(cfg.train, seed=seed))
    model = MlpModel([data.shape[1], 160, 160]).xavier_init(seed)
    return run_jule(data, branch_cfg, model=model).model


def run_dmvc(
    ds: MultiViewDataset,
    cfg: JuleConfig,
    variant: str = "mvnet",
    labels=None,
    workers: int = 1,
) -> JuleResult:
    """Deep multi-view clustering.

    cc          concatenate the views, then the plain loop;
    mvnet_fix   pretrain one branch per view with the plain loop, then run
                the loop on a head over the frozen concatenated branch
                latents (branch weights are never touched again);
    mvnet       mvnet_fix first, then re-seed clusters from the 1-NN graph
                in the unified latent space and run the loop end-to-end
                over every weight; if re-seeding cannot exceed the target
                count, fine-tune on the head's final labels instead.
    """
    if variant not in DMVC_VARIANTS:
        raise ValueError("unknown variant %r; pick one of %r" % (variant, DMVC_VARIANTS))

    if variant == "cc":
        flat = np.hstack([v.data for v in ds.views])
        model = MlpModel([flat.shape[1], 160, 160]).xavier_init(cfg.train.seed)
        return run_jule(flat, cfg, model=model, labels=labels)

    seeds = _branch_seeds(cfg.train.seed, ds.m + 2)
    jobs = [(v.data, cfg, seeds[j]) for j, v in enumerate(ds.views)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            branches = list(pool.map(_pretrain_branch, jobs))
    else:
        branches = [_pretrain_branch(job) for job in jobs]

    net = MVnetModel.__new__(MVnetModel)
    net.branches = branches
    net.head = MlpModel([sum(b.out_dim for b in branches), 160, 160]).xavier_init(seeds[-2])

    views = [v.data for v in ds.views]
    frozen = net.branch_latents(views)
    head_cfg = replace(cfg, train=replace(cfg.train, seed=seeds[-2]))
    head_run = run_jule(frozen, head_cfg, model=net.head, labels=labels)

    if variant == "mvnet_fix":
        return JuleResult(
            partition=head_run.partition,
            latent=head_run.latent,
            model=net,
            trace=head_run.trace,
        )

    # end-to-end pass over all weights, restarted from fresh seed clusters
    # in the unified latent space
    unified = net.forward(views)
    reseeded = init_clusters(unified)
    end_cfg = replace(cfg, train=replace(cfg.train, seed=seeds[-1]))
    if reseeded.k > cfg.k_target:
        final = run_jule(views, end_cfg, model=net, initial=reseeded, labels=labels)
    else:
        final = run_jule(
            views, end_cfg, model=net, initial=head_run.partition, labels=labels
        )
    final.trace = head_run.trace + final.trace
    return final
