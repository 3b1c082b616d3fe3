"""Config-driven runs: load a manifest, cluster, write report files.

A run is described by a JSON config (one file per run).  Outputs land in
the config's output directory:

    partition.csv     header "sample_id,cluster", one row per sample
    metrics.json      external scores vs ground truth (when labels exist)
    trace.jsonl       per-iteration or per-period progress, one object per line
    timing.json       extract / cluster / merge seconds plus a parallel estimate
    provenance.json   config echo + package and library versions
    latent.fvb        learned representation (deep methods only)

Runs are deterministic: the same config and seed produce byte-identical
partition files.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from ._version import __version__
from .cluster import AggConfig, KMeansConfig, agglomerative
from .consensus import DEFAULT_COASSOC_BUDGET, check_coassociation_budget, consensus_from_partitions
from .dataset import MultiViewDataset, Partition, concatenate_views, load_dataset, write_fvb
from .jule import DMVC_VARIANTS, JuleConfig, run_dmvc, run_jule
from .metrics import ScoreReport, nmi, score_partition
from .neural import TrainConfig

METHODS = ("kmeans", "agg", "mvec", "jule_single", "cc", "mvnet_fix", "mvnet")

_KMEANS_KEYS = ("n_restarts", "max_iter", "tol")
_JULE_KEYS = ("shrink_factor", "epochs_per_period", "knn_affinity", "final_fine_tune", "hidden")
_TRAIN_KEYS = ("learning_rate", "momentum", "batch_size", "epochs")
_CONFIG_KEYS = (
    "manifest",
    "method",
    "k",
    "output_dir",
    "seed",
    "view",
    "workers",
    "linkage",
    "base",
    "kmeans",
    "jule",
    "train",
    "max_bytes",
)


class ConfigError(ValueError):
    """Raised for invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Everything needed to reproduce one clustering run.

    view selects the representation for single-matrix methods (kmeans,
    agg, jule_single): an index into the manifest's views or "concat".
    kmeans / jule / train hold engine-specific overrides; the top-level
    seed feeds every stochastic component.
    """

    manifest: str
    method: str
    k: int
    output_dir: str
    seed: int = 0
    view: int | str = 0
    workers: int = 1
    linkage: str = "ward"
    base: str = "agg"
    kmeans: dict = field(default_factory=dict)
    jule: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    max_bytes: int = DEFAULT_COASSOC_BUDGET

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(
                "unknown method %r; expected one of %s" % (self.method, ", ".join(METHODS))
            )
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError("k must be a positive integer, got %r" % (self.k,))
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer, got %r" % (self.workers,))
        if isinstance(self.view, str):
            if self.view != "concat":
                raise ConfigError('view must be a view index or "concat", got %r' % self.view)
        elif not isinstance(self.view, int) or self.view < 0:
            raise ConfigError('view must be a non-negative index or "concat", got %r' % (self.view,))
        if self.base not in ("agg", "kmeans"):
            raise ConfigError('base must be "agg" or "kmeans", got %r' % (self.base,))
        for key in self.kmeans:
            if key not in _KMEANS_KEYS:
                raise ConfigError(
                    "unknown kmeans option %r; valid: %s" % (key, ", ".join(_KMEANS_KEYS))
                )
        for key in self.jule:
            if key not in _JULE_KEYS:
                raise ConfigError(
                    "unknown jule option %r; valid: %s" % (key, ", ".join(_JULE_KEYS))
                )
        for key in self.train:
            if key not in _TRAIN_KEYS:
                raise ConfigError(
                    "unknown train option %r; valid: %s" % (key, ", ".join(_TRAIN_KEYS))
                )
        if self.max_bytes < 1:
            raise ConfigError("max_bytes must be positive")
        # Engine configs validate their own numeric ranges; surface those
        # complaints as config errors too.
        try:
            if self.method == "kmeans":
                self.kmeans_config()
            elif self.method in ("agg", "mvec"):
                AggConfig(k=self.k, linkage=self.linkage)
            if self.method == "mvec" and self.base == "kmeans":
                self.kmeans_config()
            if self.method in ("jule_single", "cc", "mvnet_fix", "mvnet"):
                self.jule_config()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object, got %s" % type(raw).__name__)
        unknown = sorted(set(raw) - set(_CONFIG_KEYS))
        if unknown:
            raise ConfigError(
                "unknown config keys %r; valid keys: %s" % (unknown, ", ".join(_CONFIG_KEYS))
            )
        missing = [key for key in ("manifest", "method", "k", "output_dir") if key not in raw]
        if missing:
            raise ConfigError("config is missing required keys: %s" % ", ".join(missing))
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError("config file missing: %s" % path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config is not valid JSON: %s" % exc) from exc
        return cls.from_dict(raw)

    def as_dict(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "method": self.method,
            "k": self.k,
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "view": self.view,
            "workers": self.workers,
            "linkage": self.linkage,
            "base": self.base,
            "kmeans": dict(self.kmeans),
            "jule": dict(self.jule),
            "train": dict(self.train),
            "max_bytes": self.max_bytes,
        }

    def kmeans_config(self) -> KMeansConfig:
        return KMeansConfig(k=self.k, seed=self.seed, **self.kmeans)

    def jule_config(self) -> JuleConfig:
        train = TrainConfig(seed=self.seed, **self.train)
        opts = {k: v for k, v in self.jule.items() if k != "hidden"}
        return JuleConfig(k_target=self.k, train=train, **opts)


@dataclass
class TimingBreakdown:
    """Wall-clock decomposition of one run, mirroring the parallel cost
    model: per-view extraction t1, per-view clustering t2, and a final
    consensus / merge stage t3 executed once.
    """

    extract_seconds: list[float]
    cluster_seconds: list[float]
    merge_seconds: float
    workers: int = 1

    def __post_init__(self) -> None:
        self.extract_seconds = [float(v) for v in self.extract_seconds]
        self.cluster_seconds = [float(v) for v in self.cluster_seconds]
        if len(self.extract_seconds) != len(self.cluster_seconds):
            raise ValueError("extract and cluster timings must cover the same views")
        if not self.extract_seconds:
            raise ValueError("timing breakdown needs at least one view")
        if min(self.extract_seconds) < 0 or min(self.cluster_seconds) < 0:
            raise ValueError("timings must be non-negative")
        if self.merge_seconds < 0:
            raise ValueError("timings must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def as_dict(self) -> dict:
        return {
            "extract_seconds": self.extract_seconds,
            "cluster_seconds": self.cluster_seconds,
            "merge_seconds": self.merge_seconds,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TimingBreakdown":
        return cls(
            extract_seconds=raw["extract_seconds"],
            cluster_seconds=raw["cluster_seconds"],
            merge_seconds=float(raw["merge_seconds"]),
            workers=int(raw.get("workers", 1)),
        )


def estimate_parallel_time(tb: TimingBreakdown) -> float:
    """Total wall-clock estimate when views are processed in parallel.

    With m views on m' workers, each worker handles ceil(m/m') views and
    the slowest view bounds every round, then the single-threaded
    consensus stage runs: ceil(m/m') * max_j(t1_j + t2_j) + t3.
    """
    m = len(tb.extract_seconds)
    slowest = max(t1 + t2 for t1, t2 in zip(tb.extract_seconds, tb.cluster_seconds))
    return math.ceil(m / tb.workers) * slowest + tb.merge_seconds


@dataclass
class RunResult:
    """In-memory summary of one pipeline run."""

    partition: Partition
    report: ScoreReport | None
    timing: TimingBreakdown
    paths: dict[str, Path]
    trace: list[dict] = field(default_factory=list)


def _select_matrix(ds: MultiViewDataset, view) -> np.ndarray:
    if view == "concat":
        return concatenate_views(ds).data
    if not 0 <= view < ds.m:
        raise ConfigError("view index %d out of range for M=%d views" % (view, ds.m))
    return ds.views[view].data


def _timed_cluster_one_view(args):
    data, base = args
    start = time.perf_counter()
    part = base.cluster(data)
    if not isinstance(part, Partition):
        part = part.partition
    return part, time.perf_counter() - start


def _partition_lines(ds: MultiViewDataset, partition: Partition) -> str:
    lines = ["sample_id,cluster"]
    for sid, label in zip(ds.sample_ids, partition.assignments):
        lines.append("%s,%d" % (sid, label))
    return "\n".join(lines) + "\n"


def run(config: RunConfig) -> RunResult:
    """Execute the configured method and write all report files."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(config.manifest)

    extract = [float(v.extract_seconds or 0.0) for v in ds.views]
    cluster = [0.0] * ds.m
    merge = 0.0
    trace: list[dict] = []
    latent = None

    if config.method in ("kmeans", "agg", "jule_single"):
        x = _select_matrix(ds, config.view)
        start = time.perf_counter()
        if config.method == "kmeans":
            result = config.kmeans_config().cluster(x)
            partition = result.partition
            trace = [
                {"iter": i, "inertia": float(v)} for i, v in enumerate(result.inertia_trace)
            ]
        elif config.method == "agg":
            partition, heights = agglomerative(
                x, config.k, config.linkage, return_heights=True
            )
            trace = [{"merge": i, "height": float(h)} for i, h in enumerate(heights)]
        else:
            jule_result = run_jule(x, config.jule_config(), labels=ds.labels)
            partition = jule_result.partition
            trace = jule_result.trace
            latent = jule_result.latent
        elapsed = time.perf_counter() - start
        if isinstance(config.view, int):
            cluster[config.view] = elapsed
            extract = [extract[config.view]]
            cluster = [cluster[config.view]]
        else:
            # Concatenation needs every view first; the fit itself is one
            # indivisible stage, so it lands in the merge slot.
            merge = elapsed

    elif config.method == "mvec":
        check_coassociation_budget(ds.n, config.max_bytes)
        if config.base == "kmeans":
            base = config.kmeans_config()
        else:
            base = AggConfig(k=config.k, linkage=config.linkage)
        jobs = [(v.data, base) for v in ds.views]
        if config.workers > 1 and ds.m > 1:
            with ProcessPoolExecutor(max_workers=min(config.workers, ds.m)) as pool:
                timed = list(pool.map(_timed_cluster_one_view, jobs))
        else:
            timed = [_timed_cluster_one_view(job) for job in jobs]
        parts = [p for p, _ in timed]
        cluster = [sec for _, sec in timed]
        start = time.perf_counter()
        mv = consensus_from_partitions(parts, config.k, config.max_bytes)
        merge = time.perf_counter() - start
        partition = mv.partition

    else:
        start = time.perf_counter()
        jule_result = run_dmvc(
            ds,
            config.jule_config(),
            variant=config.method,
            labels=ds.labels,
            workers=config.workers,
        )
        merge = time.perf_counter() - start
        partition = jule_result.partition
        trace = jule_result.trace
        latent = jule_result.latent

    timing = TimingBreakdown(
        extract_seconds=extract,
        cluster_seconds=cluster,
        merge_seconds=merge,
        workers=config.workers,
    )

    paths: dict[str, Path] = {}

    paths["partition"] = out_dir / "partition.csv"
    paths["partition"].write_text(_partition_lines(ds, partition))

    report = None
    if ds.labels is not None:
        report = score_partition(ds.labels, partition.assignments)
        paths["metrics"] = out_dir / "metrics.json"
        paths["metrics"].write_text(json.dumps(report.rounded(), indent=2, sort_keys=True) + "\n")

    paths["trace"] = out_dir / "trace.jsonl"
    paths["trace"].write_text("".join(json.dumps(entry) + "\n" for entry in trace))

    paths["timing"] = out_dir / "timing.json"
    timing_doc = timing.as_dict()
    timing_doc["estimated_parallel_seconds"] = estimate_parallel_time(timing)
    paths["timing"].write_text(json.dumps(timing_doc, indent=2, sort_keys=True) + "\n")

    paths["provenance"] = out_dir / "provenance.json"
    provenance = {
        "config": config.as_dict(),
        "package": "mvclust",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    paths["provenance"].write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n")

    if latent is not None:
        paths["latent"] = out_dir / "latent.fvb"
        write_fvb(paths["latent"], latent)

    return RunResult(partition=partition, report=report, timing=timing, paths=paths, trace=trace)


def eval_representation(x, labels, k: int | None = None, seeds=(0, 1, 2, 3, 4)) -> float:
    """Mean NMI of k-means on a representation across restart seeds.

    Scores how cluster-friendly a representation is: one-hot class
    indicators reach 1.0, structureless noise stays near 0.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise ValueError("labels length %d does not match N=%d" % (labels.shape[0], x.shape[0]))
    if k is None:
        k = int(np.unique(labels).size)
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    scores = []
    for seed in seeds:
        result = KMeansConfig(k=k, seed=int(seed)).cluster(x)
        scores.append(nmi(labels, result.partition.assignments))
    return float(np.mean(scores))
