import json
import math

import numpy as np
import pytest

from mvclust.dataset import read_fvb
from mvclust.pipeline import (
    ConfigError,
    RunConfig,
    TimingBreakdown,
    estimate_parallel_time,
    eval_representation,
    run,
)

from conftest import build_blob_dataset


def minimal_config(manifest, out, **overrides):
    raw = {"manifest": str(manifest), "method": "agg", "k": 3, "output_dir": str(out)}
    raw.update(overrides)
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------

def test_runconfig_rejects_unknown_and_missing_keys(tmp_path):
    with pytest.raises(ConfigError, match="unknown config key"):
        RunConfig.from_dict(
            {"manifest": "m", "method": "agg", "k": 2, "output_dir": "o", "bogus": 1}
        )
    with pytest.raises(ConfigError, match="missing required"):
        RunConfig.from_dict({"method": "agg", "k": 2})


def test_runconfig_validates_fields():
    base = {"manifest": "m", "method": "agg", "k": 2, "output_dir": "o"}
    with pytest.raises(ConfigError, match="unknown method"):
        RunConfig.from_dict({**base, "method": "spectral"})
    with pytest.raises(ConfigError, match="k must be"):
        RunConfig.from_dict({**base, "k": 0})
    with pytest.raises(ConfigError, match="k must be"):
        RunConfig.from_dict({**base, "k": 2.5})
    with pytest.raises(ConfigError, match="workers"):
        RunConfig.from_dict({**base, "workers": 0})
    with pytest.raises(ConfigError, match="view"):
        RunConfig.from_dict({**base, "view": "all"})
    with pytest.raises(ConfigError, match="view"):
        RunConfig.from_dict({**base, "view": -1})
    with pytest.raises(ConfigError, match="base"):
        RunConfig.from_dict({**base, "base": "spectral"})
    with pytest.raises(ConfigError, match="unknown kmeans option"):
        RunConfig.from_dict({**base, "method": "kmeans", "kmeans": {"restarts": 3}})
    with pytest.raises(ConfigError, match="unknown jule option"):
        RunConfig.from_dict({**base, "method": "cc", "jule": {"period": 3}})
    with pytest.raises(ConfigError, match="unknown train option"):
        RunConfig.from_dict({**base, "method": "cc", "train": {"lr": 0.1}})
    # Engine-level range errors surface as config errors.
    with pytest.raises(ConfigError, match="linkage"):
        RunConfig.from_dict({**base, "linkage": "median"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**base, "method": "kmeans", "kmeans": {"n_restarts": 0}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**base, "method": "mvnet", "jule": {"shrink_factor": 1.5}})


def test_runconfig_json_round_trip(tmp_path):
    path = tmp_path / "run.json"
    doc = {
        "manifest": "data/manifest.json",
        "method": "mvec",
        "k": 4,
        "output_dir": "out",
        "seed": 7,
        "linkage": "average",
    }
    path.write_text(json.dumps(doc))
    cfg = RunConfig.from_json(path)
    assert cfg.method == "mvec" and cfg.k == 4 and cfg.seed == 7
    echo = cfg.as_dict()
    assert echo["linkage"] == "average"
    assert RunConfig.from_dict(echo).as_dict() == echo

    with pytest.raises(ConfigError, match="missing"):
        RunConfig.from_json(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        RunConfig.from_json(bad)
    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        RunConfig.from_json(listy)


# ---------------------------------------------------------------------------
# Timing model
# ---------------------------------------------------------------------------

def test_timing_breakdown_validation():
    with pytest.raises(ValueError):
        TimingBreakdown([1.0], [1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        TimingBreakdown([], [], 0.0)
    with pytest.raises(ValueError):
        TimingBreakdown([-1.0], [1.0], 0.0)
    with pytest.raises(ValueError):
        TimingBreakdown([1.0], [1.0], -0.5)
    with pytest.raises(ValueError):
        TimingBreakdown([1.0], [1.0], 0.0, workers=0)
    tb = TimingBreakdown([1, 2], [3, 4], 5, workers=2)
    assert TimingBreakdown.from_dict(tb.as_dict()).as_dict() == tb.as_dict()


def test_estimate_parallel_time_worked_example():
    tb = TimingBreakdown([3.0, 5.0], [2.0, 1.0], 4.0, workers=2)
    assert estimate_parallel_time(tb) == 10.0
    # More workers than views changes nothing.
    assert estimate_parallel_time(TimingBreakdown([3, 5], [2, 1], 4, workers=8)) == 10.0
    # One worker serializes the two rounds.
    assert estimate_parallel_time(TimingBreakdown([3, 5], [2, 1], 4, workers=1)) == 16.0


def test_estimate_parallel_time_ceiling_factor():
    tb = TimingBreakdown([1.0] * 10, [0.0] * 10, 0.0, workers=3)
    assert math.ceil(10 / 3) == 4
    assert estimate_parallel_time(tb) == 4.0


def test_estimate_parallel_time_single_view():
    tb = TimingBreakdown([2.5], [1.5], 3.0, workers=1)
    assert estimate_parallel_time(tb) == 7.0


# ---------------------------------------------------------------------------
# run()
# ---------------------------------------------------------------------------

def test_run_agg_writes_all_reports(blob_manifest, tmp_path):
    manifest = blob_manifest()
    out = tmp_path / "run_agg"
    result = run(minimal_config(manifest, out))

    csv_lines = (out / "partition.csv").read_text().splitlines()
    assert csv_lines[0] == "sample_id,cluster"
    assert len(csv_lines) == 31
    assert result.partition.k == 3

    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics) == {"nmi", "pur", "acc", "fmi", "mix"}
    assert metrics["nmi"] > 0.9

    timing = json.loads((out / "timing.json").read_text())
    assert timing["extract_seconds"] == [3.0]
    assert len(timing["cluster_seconds"]) == 1
    assert "estimated_parallel_seconds" in timing

    provenance = json.loads((out / "provenance.json").read_text())
    assert provenance["package"] == "mvclust"
    assert provenance["config"]["method"] == "agg"

    trace = [json.loads(ln) for ln in (out / "trace.jsonl").read_text().splitlines()]
    heights = [e["height"] for e in trace]
    assert heights == sorted(heights)


def test_run_kmeans_trace_is_monotone(blob_manifest, tmp_path):
    manifest = blob_manifest()
    out = tmp_path / "run_km"
    result = run(minimal_config(manifest, out, method="kmeans", seed=3))
    trace = [json.loads(ln) for ln in (out / "trace.jsonl").read_text().splitlines()]
    inertias = [e["inertia"] for e in trace]
    assert len(inertias) >= 1
    assert all(b <= a + 1e-9 for a, b in zip(inertias, inertias[1:]))
    assert result.report is not None and result.report.nmi > 0.9


def test_run_mvec_times_each_view(blob_manifest, tmp_path):
    manifest = blob_manifest()
    out = tmp_path / "run_mvec"
    result = run(minimal_config(manifest, out, method="mvec"))
    timing = json.loads((out / "timing.json").read_text())
    assert timing["extract_seconds"] == [3.0, 5.0]
    assert len(timing["cluster_seconds"]) == 2
    assert all(v >= 0 for v in timing["cluster_seconds"])
    assert timing["merge_seconds"] >= 0
    assert result.report.nmi > 0.9


def test_run_jule_single_writes_latent(blob_manifest, tmp_path):
    manifest = blob_manifest(n_per_class=8)
    out = tmp_path / "run_jule"
    cfg = minimal_config(
        manifest,
        out,
        method="jule_single",
        jule={"epochs_per_period": 2},
        train={"epochs": 2},
    )
    result = run(cfg)
    assert (out / "latent.fvb").exists()
    latent = read_fvb(out / "latent.fvb")
    assert latent.shape == (24, 160)
    trace = [json.loads(ln) for ln in (out / "trace.jsonl").read_text().splitlines()]
    assert all("k" in e and "mean_loss" in e for e in trace)
    assert result.partition.k == 3


def test_run_concat_view_and_bad_index(blob_manifest, tmp_path):
    manifest = blob_manifest()
    out = tmp_path / "run_concat"
    result = run(minimal_config(manifest, out, view="concat"))
    assert result.partition.k == 3
    timing = json.loads((out / "timing.json").read_text())
    assert timing["extract_seconds"] == [3.0, 5.0]
    assert timing["merge_seconds"] > 0

    with pytest.raises(ConfigError, match="view index"):
        run(minimal_config(manifest, tmp_path / "x", view=5))


def test_run_determinism_byte_identical(blob_manifest, tmp_path):
    manifest = blob_manifest()
    for method in ("kmeans", "mvec"):
        out_a = tmp_path / ("a_" + method)
        out_b = tmp_path / ("b_" + method)
        run(minimal_config(manifest, out_a, method=method, seed=11))
        run(minimal_config(manifest, out_b, method=method, seed=11))
        assert (out_a / "partition.csv").read_bytes() == (out_b / "partition.csv").read_bytes()


# ---------------------------------------------------------------------------
# eval_representation
# ---------------------------------------------------------------------------

def test_eval_representation_one_hot_is_perfect():
    labels = np.repeat(np.arange(4), 10)
    one_hot = np.eye(4)[labels]
    assert eval_representation(one_hot, labels, k=4, seeds=(0, 1)) == 1.0


def test_eval_representation_noise_scores_low():
    rng = np.random.default_rng(0)
    n = 500
    labels = rng.integers(0, 5, size=n)
    noise = rng.standard_normal((n, 8))
    score = eval_representation(noise, labels, k=5, seeds=(0, 1, 2))
    assert score < 0.1


def test_eval_representation_validation():
    x = np.zeros((4, 2))
    with pytest.raises(ValueError):
        eval_representation(x, [0, 1, 0], k=2)
    with pytest.raises(ValueError):
        eval_representation(x, [0, 1, 0, 1], k=2, seeds=())
    # k defaults to the number of classes in the labels.
    labels = np.array([0, 0, 1, 1])
    sep = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]])
    assert eval_representation(sep, labels, seeds=(0,)) == 1.0
