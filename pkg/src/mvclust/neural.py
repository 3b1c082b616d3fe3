"""Minimal feed-forward network engine with exact analytic gradients.

Two fixed topologies: a plain MLP (input-160-160, ReLU on the hidden
layer, linear output) and a multi-input variant with one MLP branch per
view feeding a concatenation into a head MLP.  Training is mini-batch
momentum SGD on a cross-entropy objective routed through a disposable
linear classifier, plus an l2 penalty on weight matrices (never biases).
Everything runs in float64 so gradients can be checked against central
finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import read_fvb, write_fvb


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings shared by every training loop."""

    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")


def relu(a: np.ndarray) -> np.ndarray:
    return np.maximum(a, 0.0)


def _xavier_fill(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class MlpModel:
    """Fully connected chain with ReLU on all layers except the last."""

    def __init__(self, layer_dims, l2_coeff: float = 1e-4):
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("layer_dims needs at least input and output, all positive")
        if l2_coeff < 0:
            raise ValueError("l2_coeff must be non-negative")
        self.layer_dims = dims
        self.l2_coeff = float(l2_coeff)
        self.weights = [np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])]
        self.biases = [np.zeros(b) for b in dims[1:]]

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def xavier_init(self, seed: int) -> "MlpModel":
        rng = np.random.default_rng(seed)
        for i, w in enumerate(self.weights):
            self.weights[i] = _xavier_fill(rng, w.shape[0], w.shape[1])
            self.biases[i][:] = 0.0
        return self

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def penalized(self) -> list[bool]:
        # aligned with parameters(): weight matrices carry l2, biases do not
        return [kind for _ in self.weights for kind in (True, False)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self._forward_cached(np.asarray(x, dtype=np.float64))
        return out

    def _forward_cached(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(
                "batch has shape %r, model expects (*, %d)" % (x.shape, self.in_dim)
            )
        caches = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w + b
            caches.append((h, pre))
            h = pre if i == last else relu(pre)
        return h, caches

    def _backward(self, caches, d_out):
        """Gradients of a scalar loss given d loss / d output.

        Returns (grads aligned with parameters(), d loss / d input).
        l2 contributions are added here so callers get total gradients.
        """
        grads = [None] * (2 * len(self.weights))
        delta = d_out
        for i in range(len(self.weights) - 1, -1, -1):
            h_in, pre = caches[i]
            if i != len(self.weights) - 1:
                delta = delta * (pre > 0)
            grads[2 * i] = h_in.T @ delta + 2.0 * self.l2_coeff * self.weights[i]
            grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
        return grads, delta

    def l2_penalty(self) -> float:
        return self.l2_coeff * float(sum((w**2).sum() for w in self.weights))

    def copy(self) -> "MlpModel":
        dup = MlpModel(self.layer_dims, self.l2_coeff)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup


class MVnetModel:
    """One MLP branch per view, concatenated into a head MLP."""

    def __init__(self, view_dims, hidden: int = 160, latent: int = 160, l2_coeff: float = 1e-4):
        if not view_dims:
            raise ValueError("need at least one view")
        self.branches = [MlpModel([d, hidden, latent], l2_coeff) for d in view_dims]
        self.head = MlpModel([latent * len(view_dims), hidden, latent], l2_coeff)

    @property
    def m(self) -> int:
        return len(self.branches)

    @property
    def out_dim(self) -> int:
        return self.head.out_dim

    @property
    def l2_coeff(self) -> float:
        return self.head.l2_coeff

    def xavier_init(self, seed: int) -> "MVnetModel":
        seqs = np.random.SeedSequence(seed).spawn(self.m + 1)
        for branch, seq in zip(self.branches, seqs[:-1]):
            branch.xavier_init(seq.generate_state(1)[0])
        self.head.xavier_init(seqs[-1].generate_state(1)[0])
        return self

    def parameters(self) -> list[np.ndarray]:
        out = []
        for branch in self.branches:
            out.extend(branch.parameters())
        out.extend(self.head.parameters())
        return out

    def penalized(self) -> list[bool]:
        out = []
        for branch in self.branches:
            out.extend(branch.penalized())
        out.extend(self.head.penalized())
        return out

    def branch_latents(self, views) -> np.ndarray:
        if len(views) != self.m:
            raise ValueError("expected %d views, got %d" % (self.m, len(views)))
        return np.hstack([b.forward(v) for b, v in zip(self.branches, views)])

    def forward(self, views) -> np.ndarray:
        return self.head.forward(self.branch_latents(views))

    def _forward_cached(self, views):
        if len(views) != self.m:
            raise ValueError("expected %d views, got %d" % (self.m, len(views)))
        branch_caches = []
        pieces = []
        for branch, v in zip(self.branches, views):
            out, cache = branch._forward_cached(np.asarray(v, dtype=np.float64))
            branch_caches.append(cache)
            pieces.append(out)
        z = np.hstack(pieces)
        out, head_cache = self.head._forward_cached(z)
        return out, (branch_caches, head_cache)

    def _backward(self, caches, d_out):
        branch_caches, head_cache = caches
        head_grads, dz = self.head._backward(head_cache, d_out)
        grads = []
        width = 0
        for branch, cache in zip(self.branches, branch_caches):
            sl = dz[:, width : width + branch.out_dim]
            width += branch.out_dim
            b_grads, _ = branch._backward(cache, sl)
            grads.extend(b_grads)
        grads.extend(head_grads)
        return grads, None

    def l2_penalty(self) -> float:
        return sum(b.l2_penalty() for b in self.branches) + self.head.l2_penalty()

    def copy(self) -> "MVnetModel":
        dup = MVnetModel.__new__(MVnetModel)
        dup.branches = [b.copy() for b in self.branches]
        dup.head = self.head.copy()
        return dup


class LinearClassifier:
    """Disposable softmax read-out used only to drive representation
    learning; thrown away and re-drawn whenever the class count changes."""

    def __init__(self, in_dim: int, n_classes: int, l2_coeff: float = 1e-4):
        if n_classes < 1:
            raise ValueError("n_classes must be positive")
        self.w = np.zeros((in_dim, n_classes))
        self.b = np.zeros(n_classes)
        self.l2_coeff = float(l2_coeff)

    @property
    def n_classes(self) -> int:
        return self.w.shape[1]

    def xavier_init(self, seed: int) -> "LinearClassifier":
        rng = np.random.default_rng(seed)
        self.w = _xavier_fill(rng, self.w.shape[0], self.w.shape[1])
        self.b[:] = 0.0
        return self

    def parameters(self) -> list[np.ndarray]:
        return [self.w, self.b]

    def penalized(self) -> list[bool]:
        return [True, False]

    def l2_penalty(self) -> float:
        return self.l2_coeff * float((self.w**2).sum())


def xavier_init(model, seed: int):
    """Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases."""
    return model.xavier_init(seed)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_gradients(model, classifier: LinearClassifier, batch, labels):
    """Cross-entropy through the classifier plus all l2 penalties.

    batch is a matrix for an MlpModel or a list of aligned view matrices
    for an MVnetModel.  Returns (loss, model grads, classifier grads)
    without touching any parameter.
    """
    labels = np.asarray(labels, dtype=np.int64)
    z, caches = model._forward_cached(batch)
    if labels.shape != (z.shape[0],):
        raise ValueError("labels must align with the batch rows")
    if labels.min() < 0 or labels.max() >= classifier.n_classes:
        raise ValueError(
            "labels must lie in [0, %d)" % classifier.n_classes
        )
    logits = z @ classifier.w + classifier.b
    logp = _log_softmax(logits)
    n = z.shape[0]
    ce = -float(logp[np.arange(n), labels].mean())
    loss = ce + model.l2_penalty() + classifier.l2_penalty()
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite training loss")

    probs = np.exp(logp)
    probs[np.arange(n), labels] -= 1.0
    d_logits = probs / n
    clf_grads = [
        z.T @ d_logits + 2.0 * classifier.l2_coeff * classifier.w,
        d_logits.sum(axis=0),
    ]
    dz = d_logits @ classifier.w.T
    model_grads, _ = model._backward(caches, dz)
    return loss, model_grads, clf_grads


class Trainer:
    """Momentum-SGD loop binding a model to a disposable classifier.

    Velocity state lives here, one slot per parameter; the classifier's
    slots are cleared whenever it is replaced.
    """

    def __init__(self, model, n_classes: int, cfg: TrainConfig):
        self.model = model
        self.cfg = cfg
        self._rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        self.classifier = None
        self._model_vel = [np.zeros_like(p) for p in model.parameters()]
        self._clf_vel = None
        self.reset_classifier(n_classes)

    def reset_classifier(self, n_classes: int) -> None:
        seed = int(self._rng.integers(2**63))
        self.classifier = LinearClassifier(
            self.model.out_dim, n_classes, self.model.l2_coeff
        ).xavier_init(seed)
        self._clf_vel = [np.zeros_like(p) for p in self.classifier.parameters()]

    def step(self, batch, labels) -> float:
        """One momentum update over one mini-batch; returns the loss
        measured before the update."""
        loss, model_grads, clf_grads = loss_and_gradients(
            self.model, self.classifier, batch, labels
        )
        lr = self.cfg.learning_rate
        mu = self.cfg.momentum
        for p, g, v in zip(self.model.parameters(), model_grads, self._model_vel):
            v *= mu
            v -= lr * g
            p += v
        for p, g, v in zip(self.classifier.parameters(), clf_grads, self._clf_vel):
            v *= mu
            v -= lr * g
            p += v
        return loss

    def _slice(self, batch, idx):
        if isinstance(batch, list):
            return [v[idx] for v in batch]
        return batch[idx]

    def run_epochs(self, batch, labels, epochs: int | None = None) -> list[float]:
        """Shuffled mini-batch passes; returns the mean loss per epoch."""
        labels = np.asarray(labels, dtype=np.int64)
        n = labels.size
        epochs = self.cfg.epochs if epochs is None else epochs
        bs = min(self.cfg.batch_size, n)
        means = []
        for _ in range(epochs):
            order = self._rng.permutation(n)
            losses = []
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                losses.append(self.step(self._slice(batch, idx), labels[idx]))
            means.append(float(np.mean(losses)))
        return means


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------

def _write_blobs(model: MlpModel, out_dir: Path, prefix: str) -> list[dict]:
    entries = []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        wf = "%sw%d.fvb" % (prefix, i)
        bf = "%sb%d.fvb" % (prefix, i)
        write_fvb(out_dir / wf, w)
        write_fvb(out_dir / bf, b[None, :])
        entries.append({"weights": wf, "biases": bf})
    return entries


def _read_blobs(model: MlpModel, base: Path, entries: list[dict]) -> None:
    for i, entry in enumerate(entries):
        model.weights[i] = read_fvb(base / entry["weights"])
        model.biases[i] = read_fvb(base / entry["biases"])[0]


def save_model(model, out_dir) -> Path:
    """Checkpoint: JSON header plus one weight blob per matrix.

    Weights are stored at 32-bit precision, so one save/load narrows them
    once; a second round-trip is exact.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(model, MVnetModel):
        header = {
            "kind": "mvnet",
            "l2_coeff": model.l2_coeff,
            "branches": [b.layer_dims for b in model.branches],
            "head": model.head.layer_dims,
            "blobs": {
                "branches": [
                    _write_blobs(b, out_dir, "branch%d_" % j)
                    for j, b in enumerate(model.branches)
                ],
                "head": _write_blobs(model.head, out_dir, "head_"),
            },
        }
    else:
        header = {
            "kind": "mlp",
            "l2_coeff": model.l2_coeff,
            "layer_dims": model.layer_dims,
            "blobs": _write_blobs(model, out_dir, "layer_"),
        }
    path = out_dir / "model.json"
    path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path


def load_model(path):
    """Rebuild a checkpointed model from its JSON header."""
    path = Path(path)
    if path.is_dir():
        path = path / "model.json"
    header = json.loads(path.read_text())
    base = path.parent
    if header["kind"] == "mlp":
        model = MlpModel(header["layer_dims"], header["l2_coeff"])
        _read_blobs(model, base, header["blobs"])
        return model
    if header["kind"] == "mvnet":
        model = MVnetModel.__new__(MVnetModel)
        model.branches = []
        for dims, blobs in zip(header["branches"], header["blobs"]["branches"]):
            branch = MlpModel(dims, header["l2_coeff"])
            _read_blobs(branch, base, blobs)
            model.branches.append(branch)
        model.head = MlpModel(header["head"], header["l2_coeff"])
        _read_blobs(model.head, base, header["blobs"]["head"])
        return model
    raise ValueError("unknown checkpoint kind %r" % header["kind"])
