"""Multi-view clustering toolkit.

Per-view baselines (k-means, agglomerative), co-association consensus,
deep clustering with alternating merge/train periods, multi-view network
variants, extractor selection from validation boards, and a small CLI.
"""

from __future__ import annotations

from ._version import __version__
from .cluster import AggConfig, KMeansConfig, KMeansResult, agglomerative, kmeans
from .consensus import (
    MemoryGuardError,
    MvecResult,
    co_association,
    consensus_from_partitions,
    mvec,
)
from .dataset import (
    DatasetError,
    MultiViewDataset,
    Partition,
    ViewMatrix,
    concatenate_views,
    load_dataset,
    read_fvb,
    save_dataset,
    write_fvb,
)
from .jule import JuleConfig, JuleResult, init_clusters, run_dmvc, run_jule
from .metrics import (
    ScoreReport,
    accuracy,
    fmi,
    fmi_local,
    mix_score,
    nmi,
    purity,
    score_partition,
)
from .neural import MlpModel, MVnetModel, TrainConfig, Trainer, load_model, save_model
from .pipeline import (
    ConfigError,
    RunConfig,
    RunResult,
    TimingBreakdown,
    estimate_parallel_time,
    eval_representation,
    run,
)
from .plots import pca_2d, save_metric_bars, save_pca_scatter, save_trace_chart
from .selection import ScoreBoard, bnet_wnet, evaluate_run, lnet_select
from .synthetic import make_blobs, make_complementary_views


__all__ = [
    "AggConfig",
    "ConfigError",
    "DatasetError",
    "JuleConfig",
    "JuleResult",
    "KMeansConfig",
    "KMeansResult",
    "MemoryGuardError",
    "MlpModel",
    "MVnetModel",
    "MultiViewDataset",
    "MvecResult",
    "Partition",
    "RunConfig",
    "RunResult",
    "ScoreBoard",
    "ScoreReport",
    "TimingBreakdown",
    "Trainer",
    "TrainConfig",
    "ViewMatrix",
    "accuracy",
    "agglomerative",
    "bnet_wnet",
    "co_association",
    "concatenate_views",
    "consensus_from_partitions",
    "estimate_parallel_time",
    "eval_representation",
    "evaluate_run",
    "fmi",
    "fmi_local",
    "init_clusters",
    "kmeans",
    "load_dataset",
    "load_model",
    "lnet_select",
    "make_blobs",
    "make_complementary_views",
    "mix_score",
    "mvec",
    "nmi",
    "pca_2d",
    "purity",
    "read_fvb",
    "run",
    "run_dmvc",
    "run_jule",
    "save_dataset",
    "save_metric_bars",
    "save_model",
    "save_pca_scatter",
    "save_trace_chart",
    "score_partition",
    "write_fvb",
    "__version__",
]
