"""Alternating train/merge loop on a toy problem.

Starts from many tiny mutual-neighbor seed clusters, then alternates
short representation-training periods with agglomerative merges in the
latent space until the target cluster count is reached.  The per-period
trace shows the cluster count shrinking and, since we pass ground truth,
the agreement score along the way.

Run from the repository root:

    python3 demos/deep_cluster_loop.py
"""

from pathlib import Path

import numpy as np

from mvclust import JuleConfig, TrainConfig, make_blobs, nmi, run_jule, save_trace_chart

OUT = Path(__file__).parent / "output" / "deep_loop"
OUT.mkdir(parents=True, exist_ok=True)

centers = np.array([[0.0, 0.0], [6.0, 0.0], [3.0, 5.0]])
x, labels = make_blobs(100, centers, spread=0.5, seed=0)

cfg = JuleConfig(k_target=3, train=TrainConfig(seed=0))
result = run_jule(x, cfg, labels=labels)

print("t   k     mean_loss   nmi")
for entry in result.trace:
    print("%-3d %-4d  %.4f      %.3f"
          % (entry["t"], entry["k"], entry.get("mean_loss", float("nan")),
             entry.get("nmi", float("nan"))))

print("final agreement: NMI %.3f" % nmi(labels, result.partition))
print("latent space: %s" % (result.latent.shape,))

save_trace_chart(result.trace, OUT / "trace.svg")
print("wrote %s" % (OUT / "trace.svg"))
