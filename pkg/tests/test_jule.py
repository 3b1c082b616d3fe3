import numpy as np
import pytest

from _oracles import oracle_affinity_merge, partition_as_sets
from mvclust.dataset import MultiViewDataset, Partition, ViewMatrix
from mvclust.jule import (
    JuleConfig,
    JuleResult,
    _shrink,
    init_clusters,
    merge_partition,
    run_dmvc,
    run_jule,
)
from mvclust.metrics import nmi
from mvclust.neural import TrainConfig
from mvclust.synthetic import make_blobs

FAST_TRAIN = TrainConfig(epochs=5, batch_size=32, seed=0)


def fast_cfg(k, **kw):
    kw.setdefault("epochs_per_period", 5)
    kw.setdefault("train", FAST_TRAIN)
    return JuleConfig(k_target=k, **kw)


# ---------------------------------------------------------------------------
# seed clustering
# ---------------------------------------------------------------------------

def test_init_clusters_mutual_pairs():
    x = np.array([[0.0], [0.1], [5.0], [5.1], [10.0], [10.1]])
    p = init_clusters(x)
    assert partition_as_sets(p.assignments) == frozenset(
        {frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})}
    )


def test_init_clusters_shared_sample_chains():
    p = init_clusters(np.array([[0.0], [1.0], [2.1]]))
    assert p.k == 1  # links 0-1 and 2-1 share sample 1


def test_init_clusters_typical_sizes():
    x = np.random.default_rng(0).standard_normal((500, 8))
    p = init_clusters(x)
    sizes = np.bincount(p.assignments)
    assert 2 <= np.median(sizes) <= 6
    assert sizes.min() >= 2  # every sample drags in its nearest neighbor


def test_init_clusters_needs_two_samples():
    with pytest.raises(ValueError):
        init_clusters(np.zeros((1, 3)))


# ---------------------------------------------------------------------------
# affinity merging
# ---------------------------------------------------------------------------

def test_merge_matches_recompute_oracle():
    rng = np.random.default_rng(1)
    for trial in range(12):
        n = int(rng.integers(12, 21))
        z = rng.standard_normal((n, 3))
        start = Partition.from_labels(rng.integers(0, 6, size=n))
        if start.k <= 3:
            continue
        got = merge_partition(z, start, 3, knn_affinity=5)
        want = oracle_affinity_merge(z.tolist(), start.assignments.tolist(), 3, 5)
        assert partition_as_sets(got.assignments) == want, trial


def test_merge_identical_points_first():
    # two singletons sitting on the same latent point must merge before
    # anything else
    z = np.array([[0.0, 0.0], [0.0, 0.0], [50.0, 0.0], [0.0, 70.0], [90.0, 90.0]])
    start = Partition.from_labels([0, 1, 2, 3, 4])
    merged = merge_partition(z, start, 4)
    assert partition_as_sets(merged.assignments) == frozenset(
        {frozenset({0, 1}), frozenset({2}), frozenset({3}), frozenset({4})}
    )


def test_merge_single_step_unions_one_pair():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((15, 2))
    start = Partition.from_labels(rng.integers(0, 5, size=15))
    merged = merge_partition(z, start, start.k - 1)
    before = partition_as_sets(start.assignments)
    after = partition_as_sets(merged.assignments)
    assert len(after) == len(before) - 1
    # exactly two old clusters unioned, everything else untouched
    vanished = before - after
    appeared = after - before
    assert len(vanished) == 2 and len(appeared) == 1
    assert frozenset().union(*vanished) == next(iter(appeared))


def test_merge_validation():
    z = np.zeros((4, 2))
    p = Partition.from_labels([0, 1, 2, 3])
    with pytest.raises(ValueError):
        merge_partition(z, p, 4)
    with pytest.raises(ValueError):
        merge_partition(z, p, 0)
    with pytest.raises(ValueError):
        merge_partition(np.zeros((3, 2)), p, 2)


def test_shrink_schedule():
    seq = [100]
    while seq[-1] > 20:
        seq.append(_shrink(seq[-1], 20, 0.9))
    assert seq[:4] == [100, 90, 81, 73]
    assert seq[-1] == 20
    assert all(a > b for a, b in zip(seq, seq[1:]))
    # small counts keep making progress where the bare ceiling would stall
    seq = [9]
    while seq[-1] > 3:
        seq.append(_shrink(seq[-1], 3, 0.9))
    assert seq == [9, 8, 7, 6, 5, 4, 3]


# ---------------------------------------------------------------------------
# full loop
# ---------------------------------------------------------------------------

def test_run_jule_recovers_blobs():
    x, y = make_blobs(40, [[0, 0], [12, 0], [0, 12]], spread=0.5, seed=3)
    res = run_jule(x, fast_cfg(3))
    assert isinstance(res, JuleResult)
    assert res.partition.k == 3
    assert nmi(y, res.partition) >= 0.95
    ks = [entry["k"] for entry in res.trace]
    assert all(a > b for a, b in zip(ks[:-1], ks[1:])) or ks[-1] == ks[-2] == 3
    assert res.latent.shape == (120, 160)


def test_run_jule_trace_and_determinism():
    x, y = make_blobs(25, [[0, 0], [9, 0], [0, 9]], spread=0.4, seed=4)
    a = run_jule(x, fast_cfg(3), labels=y)
    b = run_jule(x, fast_cfg(3), labels=y)
    assert np.array_equal(a.partition.assignments, b.partition.assignments)
    assert [e["mean_loss"] for e in a.trace] == [e["mean_loss"] for e in b.trace]
    for entry in a.trace:
        assert set(entry) == {"t", "k", "mean_loss", "nmi"}
        assert np.isfinite(entry["mean_loss"])
    # merge periods count k down to the target, then one fine-tune entry
    # under its own period index
    assert a.trace[-1]["k"] == 3
    assert a.trace[-1]["t"] == a.trace[-2]["t"] + 1


def test_run_jule_target_equals_seed_count():
    x = np.array([[0.0], [0.1], [5.0], [5.1], [10.0], [10.1]])
    seeded = init_clusters(x)
    res = run_jule(x, fast_cfg(seeded.k))
    # zero merge periods: the seed partition survives training untouched
    assert partition_as_sets(res.partition.assignments) == partition_as_sets(
        seeded.assignments
    )
    assert len(res.trace) == 1  # fine-tune only


def test_run_jule_fallback_when_seeding_too_coarse():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])  # one 1-NN chain
    assert init_clusters(x).k == 1
    with pytest.warns(UserWarning, match="falling back"):
        res = run_jule(x, fast_cfg(2, final_fine_tune=False))
    assert res.partition.k == 2


def test_run_jule_no_fine_tune_flag():
    x, _ = make_blobs(20, [[0, 0], [8, 8]], spread=0.4, seed=5)
    res = run_jule(x, fast_cfg(2, final_fine_tune=False))
    assert res.trace[-1]["k"] == 2
    assert res.partition.k == 2


def test_jule_config_validation():
    with pytest.raises(ValueError):
        JuleConfig(k_target=0)
    with pytest.raises(ValueError):
        JuleConfig(k_target=2, shrink_factor=1.0)
    with pytest.raises(ValueError):
        JuleConfig(k_target=2, epochs_per_period=0)
    with pytest.raises(ValueError):
        JuleConfig(k_target=2, knn_affinity=0)


# ---------------------------------------------------------------------------
# multi-view variants
# ---------------------------------------------------------------------------

def blob_dataset(copies=2, n_per=20, seed=6):
    x, y = make_blobs(n_per, [[0, 0], [10, 0], [0, 10]], spread=0.4, seed=seed)
    views = [ViewMatrix(x.copy(), extractor_name="c%d" % i) for i in range(copies)]
    return MultiViewDataset(views=views, labels=y)


def test_dmvc_single_view_cc_reduces_to_plain_run():
    ds = blob_dataset(copies=1)
    cfg = fast_cfg(3)
    via_dmvc = run_dmvc(ds, cfg, variant="cc")
    direct = run_jule(ds.views[0].data, cfg)
    assert np.array_equal(via_dmvc.partition.assignments, direct.partition.assignments)


def test_dmvc_duplicated_views_match_single_view_quality():
    ds = blob_dataset(copies=2)
    cfg = fast_cfg(3)
    cc = run_dmvc(ds, cfg, variant="cc")
    single = run_jule(ds.views[0].data, cfg)
    s_cc = nmi(ds.labels, cc.partition)
    s_single = nmi(ds.labels, single.partition)
    assert abs(s_cc - s_single) <= 0.02


def test_dmvc_mvnet_fix_freezes_branches():
    ds = blob_dataset(copies=2)
    cfg = fast_cfg(3)
    res = run_dmvc(ds, cfg, variant="mvnet_fix")
    assert res.partition.k == 3
    assert res.latent.shape == (ds.n, 160)
    # branches must be exactly what per-view pretraining alone produces
    from mvclust.jule import _branch_seeds, _pretrain_branch

    seeds = _branch_seeds(cfg.train.seed, ds.m + 2)
    for j, view in enumerate(ds.views):
        solo = _pretrain_branch((view.data, cfg, seeds[j]))
        for got_w, want_w in zip(res.model.branches[j].weights, solo.weights):
            assert np.array_equal(got_w, want_w)
        for got_b, want_b in zip(res.model.branches[j].biases, solo.biases):
            assert np.array_equal(got_b, want_b)


def test_dmvc_mvnet_end_to_end_runs():
    ds = blob_dataset(copies=2, n_per=15)
    res = run_dmvc(ds, fast_cfg(3), variant="mvnet")
    assert res.partition.k == 3
    assert nmi(ds.labels, res.partition) >= 0.9
    assert res.latent.shape == (ds.n, 160)


def test_dmvc_parallel_matches_serial():
    ds = blob_dataset(copies=2, n_per=12)
    cfg = fast_cfg(3)
    serial = run_dmvc(ds, cfg, variant="mvnet_fix", workers=1)
    parallel = run_dmvc(ds, cfg, variant="mvnet_fix", workers=2)
    assert np.array_equal(serial.partition.assignments, parallel.partition.assignments)


def test_dmvc_variant_validation():
    ds = blob_dataset(copies=1)
    with pytest.raises(ValueError, match="variant"):
        run_dmvc(ds, fast_cfg(3), variant="spectral")
