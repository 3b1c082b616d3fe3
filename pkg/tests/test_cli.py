import json
from pathlib import Path

import numpy as np
import pytest

from mvclust.cli import main
from mvclust.dataset import read_fvb

FIXTURE_BOARD = Path(__file__).parent / "fixtures" / "lnet_mix_board.csv"


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cluster_agg_happy_path(blob_manifest, tmp_path, capsys):
    manifest = blob_manifest()
    out = tmp_path / "run"
    code = run_cli("cluster", "--manifest", manifest, "--method", "agg", "--k", 3, "--out", out)
    assert code == 0
    lines = (out / "partition.csv").read_text().splitlines()
    assert lines[0] == "sample_id,cluster"
    assert len(lines) == 31
    stdout = capsys.readouterr().out
    assert "run complete" in stdout and '"nmi"' in stdout


def test_cluster_rejects_foreign_method(blob_manifest, tmp_path):
    manifest = blob_manifest()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "manifest": str(manifest), "method": "mvec", "k": 3,
        "output_dir": str(tmp_path / "o"),
    }))
    assert run_cli("cluster", "--config", cfg) == 2


def test_flags_override_config(blob_manifest, tmp_path):
    manifest = blob_manifest()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "manifest": str(manifest), "method": "agg", "k": 2,
        "output_dir": str(tmp_path / "from_config"),
    }))
    out = tmp_path / "from_flag"
    assert run_cli("cluster", "--config", cfg, "--k", 4, "--out", out) == 0
    clusters = {ln.split(",")[1] for ln in (out / "partition.csv").read_text().splitlines()[1:]}
    assert len(clusters) == 4
    assert not (tmp_path / "from_config").exists()


def test_partition_csv_determinism(blob_manifest, tmp_path):
    manifest = blob_manifest()
    for sub in ("mvec", "cluster"):
        a, b = tmp_path / (sub + "_a"), tmp_path / (sub + "_b")
        args = [sub, "--manifest", manifest, "--k", 3, "--seed", 5]
        assert run_cli(*args, "--out", a) == 0
        assert run_cli(*args, "--out", b) == 0
        assert (a / "partition.csv").read_bytes() == (b / "partition.csv").read_bytes()


def test_empty_manifest_is_config_error(tmp_path):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"n": 0, "views": []}))
    code = run_cli("mvec", "--manifest", manifest, "--k", 2, "--out", tmp_path / "o")
    assert code == 2


def test_missing_config_and_bad_json(tmp_path, capsys):
    assert run_cli("mvec", "--config", tmp_path / "nope.json") == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run_cli("mvec", "--config", bad) == 2
    assert "error:" in capsys.readouterr().err


def test_memory_guard_exit_code(blob_manifest, tmp_path):
    manifest = blob_manifest()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "manifest": str(manifest), "method": "mvec", "k": 3,
        "output_dir": str(tmp_path / "o"), "max_bytes": 10,
    }))
    assert run_cli("mvec", "--config", cfg) == 3


def test_jule_subcommand_runs(blob_manifest, tmp_path):
    manifest = blob_manifest(n_per_class=8)
    out = tmp_path / "jule_run"
    code = run_cli(
        "jule", "--manifest", manifest, "--k", 3, "--out", out,
        "--epochs-per-period", 2, "--train-epochs", 2,
    )
    assert code == 0
    assert (out / "latent.fvb").exists()
    trace = [json.loads(ln) for ln in (out / "trace.jsonl").read_text().splitlines()]
    assert trace and trace[-1]["k"] == 3


def test_dmvc_subcommand_runs(blob_manifest, tmp_path):
    manifest = blob_manifest(n_per_class=8)
    out = tmp_path / "dmvc_run"
    code = run_cli(
        "dmvc", "--manifest", manifest, "--k", 3, "--out", out,
        "--variant", "cc", "--epochs-per-period", 2, "--train-epochs", 2,
    )
    assert code == 0
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["config"]["method"] == "cc"


def test_eval_subcommand(blob_manifest, tmp_path, capsys):
    manifest = blob_manifest()
    out = tmp_path / "run"
    assert run_cli("cluster", "--manifest", manifest, "--k", 3, "--out", out) == 0
    capsys.readouterr()

    metrics_out = tmp_path / "scores.json"
    code = run_cli(
        "eval", "--manifest", manifest, "--partition", out / "partition.csv",
        "--out", metrics_out,
    )
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert set(printed) == {"nmi", "pur", "acc", "fmi", "mix"}
    assert json.loads(metrics_out.read_text()) == printed
    # Scores must agree with what the run itself reported.
    assert printed == json.loads((out / "metrics.json").read_text())


def test_eval_rejects_mismatched_partition(blob_manifest, tmp_path):
    manifest = blob_manifest()
    part = tmp_path / "part.csv"
    part.write_text("sample_id,cluster\n0,0\n1,1\n")
    assert run_cli("eval", "--manifest", manifest, "--partition", part) == 2

    headerless = tmp_path / "raw.csv"
    headerless.write_text("0,0\n1,1\n")
    assert run_cli("eval", "--manifest", manifest, "--partition", headerless) == 2

    assert run_cli("eval", "--manifest", manifest, "--partition", tmp_path / "nope.csv") == 2


def test_eval_requires_labels(tmp_path):
    from conftest import build_blob_dataset
    from mvclust.dataset import save_dataset

    ds = build_blob_dataset()
    ds.labels = None
    manifest = save_dataset(ds, tmp_path / "unlabeled")
    part = tmp_path / "part.csv"
    part.write_text("sample_id,cluster\n" + "\n".join("%d,0" % i for i in range(30)) + "\n")
    assert run_cli("eval", "--manifest", manifest, "--partition", part) == 2


def test_lnet_subcommand(capsys):
    assert run_cli("lnet", "--board", FIXTURE_BOARD, "--holdout", "UMist") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["lnet"]["extractor"] == "Densenet201"
    assert doc["lnet"]["holdout"] == "UMist"

    assert run_cli("lnet", "--board", FIXTURE_BOARD, "--dataset", "UMist") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["bnet"]["extractor"] == "Resnet50"
    assert doc["wnet"]["extractor"] == "Xception"

    assert run_cli("lnet", "--board", FIXTURE_BOARD, "--holdout", "NotADataset") == 2


def test_plot_subcommand(blob_manifest, tmp_path, capsys):
    manifest = blob_manifest()
    agg_dir, km_dir = tmp_path / "agg", tmp_path / "km"
    assert run_cli("cluster", "--manifest", manifest, "--k", 3, "--out", agg_dir) == 0
    assert run_cli(
        "cluster", "--manifest", manifest, "--method", "kmeans", "--k", 3, "--out", km_dir
    ) == 0
    jule_dir = tmp_path / "jule"
    assert run_cli(
        "jule", "--manifest", manifest, "--k", 3, "--out", jule_dir,
        "--epochs-per-period", 2, "--train-epochs", 2,
    ) == 0
    capsys.readouterr()

    plots = tmp_path / "figs"
    code = run_cli(
        "plot", "--run-dir", agg_dir, km_dir, jule_dir,
        "--manifest", manifest, "--out", plots,
    )
    assert code == 0
    assert (plots / "metrics.svg").exists()
    assert (plots / "pca_jule_single.svg").exists()
    trace_svgs = list(plots.glob("trace_*.svg"))
    assert trace_svgs

    single = tmp_path / "figs_single"
    assert run_cli("plot", "--run-dir", jule_dir, "--out", single) == 0
    assert (single / "trace.svg").exists() and (single / "pca.svg").exists()

    assert run_cli("plot", "--run-dir", tmp_path / "missing") == 2
    empty = tmp_path / "empty_dir"
    empty.mkdir()
    assert run_cli("plot", "--run-dir", empty) == 2


def test_export_coassoc(blob_manifest, tmp_path):
    manifest = blob_manifest()
    out = tmp_path / "coassoc.fvb"
    assert run_cli("export-coassoc", "--manifest", manifest, "--k", 3, "--out", out) == 0
    matrix = read_fvb(out)
    assert matrix.shape == (30, 30)
    assert np.allclose(matrix, matrix.T)
    assert np.allclose(np.diag(matrix), 1.0)
    # Two views means entries are multiples of 1/2.
    assert np.allclose(matrix * 2, np.round(matrix * 2))

    assert run_cli(
        "export-coassoc", "--manifest", manifest, "--k", 3,
        "--out", out, "--max-bytes", 10,
    ) == 3


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "mvclust" in capsys.readouterr().out
