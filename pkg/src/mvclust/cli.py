"""Command line entry points.

Every run subcommand accepts --config (a JSON run file) and flags that
override individual config fields.  Exit codes: 0 success, 2 bad config
or input, 3 co-association memory guard, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .cluster import LINKAGES, AggConfig
from .consensus import DEFAULT_COASSOC_BUDGET, MemoryGuardError, cluster_each_view, co_association
from .dataset import DatasetError, load_dataset, read_fvb, write_fvb
from .jule import DMVC_VARIANTS
from .metrics import score_partition
from .pipeline import ConfigError, RunConfig, run
from .plots import save_metric_bars, save_pca_scatter, save_trace_chart
from .selection import ScoreBoard, bnet_wnet, lnet_select


def _load_config_dict(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError("config file missing: %s" % path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON: %s" % exc) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _parse_view(text: str):
    if text == "concat":
        return "concat"
    try:
        return int(text)
    except ValueError:
        raise ConfigError('--view takes a view index or "concat", got %r' % text) from None


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON run config; flags override its fields")
    sub.add_argument("--manifest", help="dataset manifest path")
    sub.add_argument("--k", type=int, help="number of clusters")
    sub.add_argument("--seed", type=int, help="seed for every stochastic component")
    sub.add_argument("--workers", type=int, help="parallel workers for per-view work")
    sub.add_argument("--out", help="output directory for report files")


def _build_run_config(args, method: str | None, extra: dict | None = None) -> RunConfig:
    raw = _load_config_dict(getattr(args, "config", None))
    if method is not None:
        raw["method"] = method
    for flag, key in (("manifest", "manifest"), ("k", "k"), ("seed", "seed"),
                      ("workers", "workers"), ("out", "output_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = value
    if extra:
        raw.update(extra)
    return RunConfig.from_dict(raw)


def _execute(config: RunConfig) -> int:
    result = run(config)
    print("run complete: %d samples into %d clusters" % (result.partition.n, result.partition.k))
    if result.report is not None:
        print(json.dumps(result.report.rounded(), sort_keys=True))
    print("outputs in %s" % config.output_dir)
    return 0


def _cmd_cluster(args) -> int:
    raw = _load_config_dict(args.config)
    method = args.method or raw.get("method") or "agg"
    if method not in ("kmeans", "agg"):
        raise ConfigError('cluster handles methods "kmeans" and "agg", got %r' % method)
    extra: dict = {}
    if args.linkage is not None:
        extra["linkage"] = args.linkage
    if args.view is not None:
        extra["view"] = _parse_view(args.view)
    return _execute(_build_run_config(args, method, extra))


def _cmd_mvec(args) -> int:
    extra: dict = {}
    if args.linkage is not None:
        extra["linkage"] = args.linkage
    if args.base is not None:
        extra["base"] = args.base
    return _execute(_build_run_config(args, "mvec", extra))


def _jule_overrides(args, raw: dict) -> dict:
    jule = dict(raw.get("jule", {}))
    if getattr(args, "epochs_per_period", None) is not None:
        jule["epochs_per_period"] = args.epochs_per_period
    if getattr(args, "no_fine_tune", False):
        jule["final_fine_tune"] = False
    train = dict(raw.get("train", {}))
    if getattr(args, "train_epochs", None) is not None:
        train["epochs"] = args.train_epochs
    extra: dict = {}
    if jule:
        extra["jule"] = jule
    if train:
        extra["train"] = train
    return extra


def _cmd_jule(args) -> int:
    raw = _load_config_dict(args.config)
    extra = _jule_overrides(args, raw)
    if args.view is not None:
        extra["view"] = _parse_view(args.view)
    return _execute(_build_run_config(args, "jule_single", extra))


def _cmd_dmvc(args) -> int:
    raw = _load_config_dict(args.config)
    method = args.variant or raw.get("method") or "mvnet"
    if method not in DMVC_VARIANTS:
        raise ConfigError("dmvc variant must be one of %s" % ", ".join(DMVC_VARIANTS))
    extra = _jule_overrides(args, raw)
    return _execute(_build_run_config(args, method, extra))


def _read_partition_csv(path) -> dict[str, int]:
    path = Path(path)
    if not path.exists():
        raise ConfigError("partition file missing: %s" % path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["sample_id", "cluster"]:
        raise ConfigError('partition CSV must start with header "sample_id,cluster"')
    mapping: dict[str, int] = {}
    for row in rows[1:]:
        if len(row) != 2:
            raise ConfigError("malformed partition row %r" % (row,))
        if row[0] in mapping:
            raise ConfigError("duplicate sample_id %r in partition" % row[0])
        mapping[row[0]] = int(row[1])
    return mapping


def _cmd_eval(args) -> int:
    ds = load_dataset(args.manifest)
    if ds.labels is None:
        raise ConfigError("dataset has no ground-truth labels to evaluate against")
    mapping = _read_partition_csv(args.partition)
    missing = [sid for sid in ds.sample_ids if sid not in mapping]
    if missing or len(mapping) != ds.n:
        raise ConfigError(
            "partition does not cover the dataset: %d rows for N=%d (first missing: %s)"
            % (len(mapping), ds.n, missing[0] if missing else "none")
        )
    predicted = np.array([mapping[sid] for sid in ds.sample_ids], dtype=np.int64)
    report = score_partition(ds.labels, predicted)
    doc = report.rounded()
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_lnet(args) -> int:
    board = ScoreBoard.from_csv(args.board)
    doc: dict = {}
    idx = lnet_select(board, args.holdout)
    doc["lnet"] = {"index": idx, "extractor": board.extractor_names[idx]}
    if args.holdout is not None:
        doc["lnet"]["holdout"] = args.holdout
    if args.dataset is not None:
        row = board.row(args.dataset)
        best, worst = bnet_wnet(row)
        doc["bnet"] = {"index": best, "extractor": board.extractor_names[best]}
        doc["wnet"] = {"index": worst, "extractor": board.extractor_names[worst]}
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _run_labels(run_dirs: list[Path]) -> dict[Path, str]:
    labels: dict[Path, str] = {}
    seen: set[str] = set()
    for d in run_dirs:
        label = d.name
        prov = d / "provenance.json"
        if prov.exists():
            try:
                label = json.loads(prov.read_text())["config"]["method"]
            except (json.JSONDecodeError, KeyError, TypeError):
                pass
        if label in seen:
            label = "%s:%s" % (label, d.name)
        seen.add(label)
        labels[d] = label
    return labels


def _cmd_plot(args) -> int:
    run_dirs = [Path(p) for p in args.run_dir]
    for d in run_dirs:
        if not d.is_dir():
            raise ConfigError("run directory missing: %s" % d)
    out_dir = Path(args.out) if args.out else run_dirs[0]
    labels = _run_labels(run_dirs)
    ds_labels = None
    if args.manifest:
        ds_labels = load_dataset(args.manifest).labels

    made: list[Path] = []
    reports = {}
    for d in run_dirs:
        mpath = d / "metrics.json"
        if mpath.exists():
            reports[labels[d]] = json.loads(mpath.read_text())
    if reports:
        made.append(save_metric_bars(reports, out_dir / "metrics.svg"))

    single = len(run_dirs) == 1
    for d in run_dirs:
        tpath = d / "trace.jsonl"
        if tpath.exists():
            trace = [json.loads(ln) for ln in tpath.read_text().splitlines() if ln.strip()]
            if any("k" in e for e in trace):
                name = "trace.svg" if single else "trace_%s.svg" % labels[d]
                made.append(save_trace_chart(trace, out_dir / name))
        lpath = d / "latent.fvb"
        if lpath.exists():
            latent = read_fvb(lpath)
            pca_labels = ds_labels if ds_labels is not None and len(ds_labels) == latent.shape[0] else None
            name = "pca.svg" if single else "pca_%s.svg" % labels[d]
            made.append(save_pca_scatter(latent, out_dir / name, labels=pca_labels))

    if not made:
        raise ConfigError(
            "nothing to plot: no metrics.json, trace.jsonl, or latent.fvb under %s"
            % ", ".join(str(d) for d in run_dirs)
        )
    for path in made:
        print("wrote %s" % path)
    return 0


def _cmd_export_coassoc(args) -> int:
    ds = load_dataset(args.manifest)
    base = AggConfig(k=args.k, linkage=args.linkage)
    parts = cluster_each_view(ds, base, workers=args.workers)
    matrix = co_association(parts, args.max_bytes)
    write_fvb(args.out, matrix)
    print("wrote %s (%d x %d)" % (args.out, matrix.shape[0], matrix.shape[1]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvclust", description="Multi-view clustering toolkit"
    )
    parser.add_argument("--version", action="version", version="mvclust %s" % __version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("cluster", help="single-representation k-means or agglomerative")
    _add_run_flags(p)
    p.add_argument("--method", choices=("kmeans", "agg"))
    p.add_argument("--linkage", choices=LINKAGES)
    p.add_argument("--view", help='view index or "concat"')
    p.set_defaults(func=_cmd_cluster)

    p = subs.add_parser("mvec", help="multi-view ensemble via co-association consensus")
    _add_run_flags(p)
    p.add_argument("--linkage", choices=LINKAGES, help="per-view linkage")
    p.add_argument("--base", choices=("agg", "kmeans"), help="per-view algorithm")
    p.set_defaults(func=_cmd_mvec)

    p = subs.add_parser("jule", help="alternating train/merge loop on one representation")
    _add_run_flags(p)
    p.add_argument("--view", help='view index or "concat"')
    p.add_argument("--epochs-per-period", type=int)
    p.add_argument("--train-epochs", type=int)
    p.add_argument("--no-fine-tune", action="store_true")
    p.set_defaults(func=_cmd_jule)

    p = subs.add_parser("dmvc", help="deep multi-view clustering variants")
    _add_run_flags(p)
    p.add_argument("--variant", choices=DMVC_VARIANTS)
    p.add_argument("--epochs-per-period", type=int)
    p.add_argument("--train-epochs", type=int)
    p.add_argument("--no-fine-tune", action="store_true")
    p.set_defaults(func=_cmd_dmvc)

    p = subs.add_parser("eval", help="score a partition CSV against dataset labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--out", help="also write the metrics JSON here")
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("lnet", help="pick extractors from a score board CSV")
    p.add_argument("--board", required=True)
    p.add_argument("--holdout", help="dataset name to exclude from the mean")
    p.add_argument("--dataset", help="also report best/worst for this dataset row")
    p.set_defaults(func=_cmd_lnet)

    p = subs.add_parser("plot", help="render SVG figures from run outputs")
    p.add_argument("--run-dir", nargs="+", required=True)
    p.add_argument("--manifest", help="color PCA scatters with this dataset's labels")
    p.add_argument("--out", help="directory for the SVGs (default: first run dir)")
    p.set_defaults(func=_cmd_plot)

    p = subs.add_parser("export-coassoc", help="write the co-association matrix as .fvb")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--linkage", choices=LINKAGES, default="ward")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-bytes", type=int, default=DEFAULT_COASSOC_BUDGET)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_coassoc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MemoryGuardError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print("numeric failure: %s" % exc, file=sys.stderr)
        return 4
    except (ConfigError, DatasetError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
