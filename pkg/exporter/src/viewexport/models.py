"""Architecture registry and batched feature extraction.

Every architecture is exported at the last layer before its
classification head, pooled to one vector per image.  The registry
pins each network's native square input size and the width of that
penultimate activation, so the output dimensionality is checked, not
assumed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class ExportError(ValueError):
    """Raised for unusable specs, unknown architectures, or bad outputs."""


@dataclass(frozen=True)
class ArchInfo:
    name: str
    backend: str        # "torchvision" or "timm"
    model_id: str
    input_size: int
    feature_dim: int


ARCHITECTURES = {
    info.name: info
    for info in (
        ArchInfo("vgg16", "torchvision", "vgg16", 224, 4096),
        ArchInfo("vgg19", "torchvision", "vgg19", 224, 4096),
        ArchInfo("inception", "torchvision", "inception_v3", 299, 2048),
        ArchInfo("xception", "timm", "legacy_xception", 299, 2048),
        ArchInfo("resnet50", "torchvision", "resnet50", 224, 2048),
        ArchInfo("densenet121", "torchvision", "densenet121", 224, 1024),
        ArchInfo("densenet169", "torchvision", "densenet169", 224, 1664),
        ArchInfo("densenet201", "torchvision", "densenet201", 224, 1920),
        ArchInfo("nasnet", "timm", "nasnetalarge", 331, 4032),
        ArchInfo("inceptionresnet", "timm", "inception_resnet_v2", 299, 1536),
    )
}


def resolve_architecture(name: str) -> ArchInfo:
    key = name.strip().lower()
    if key not in ARCHITECTURES:
        raise ExportError(
            "unknown architecture %r; available: %s" % (name, ", ".join(sorted(ARCHITECTURES)))
        )
    return ARCHITECTURES[key]


def _strip_head(info: ArchInfo, model) -> None:
    if info.model_id.startswith("vgg"):
        # Drop only the final class projection; keeps fc2 and its ReLU.
        model.classifier = nn.Sequential(*list(model.classifier.children())[:-1])
    elif info.model_id.startswith("densenet"):
        model.classifier = nn.Identity()
    else:
        model.fc = nn.Identity()


def build_model(info: ArchInfo):
    """Instantiate the headless network; returns (model, weights provenance).

    Pretrained weights are attempted first.  When they cannot be fetched
    (offline box) the architecture is kept with seeded random weights so
    exports stay structurally valid and reproducible; the provenance
    string in the manifest says which of the two happened.
    """
    torch.manual_seed(0)
    if info.backend == "timm":
        try:
            import timm
        except ModuleNotFoundError as exc:
            raise ExportError(
                "architecture %r needs the timm backend; install viewexport[timm]" % info.name
            ) from exc
        try:
            model = timm.create_model(info.model_id, pretrained=True, num_classes=0)
            provenance = "timm %s %s imagenet" % (timm.__version__, info.model_id)
        except Exception as exc:
            warnings.warn(
                "pretrained weights for %s unavailable (%s); using seeded random "
                "initialization" % (info.name, exc)
            )
            torch.manual_seed(0)
            model = timm.create_model(info.model_id, pretrained=False, num_classes=0)
            provenance = "timm %s %s random-init" % (timm.__version__, info.model_id)
    else:
        import torchvision
        from torchvision import models as tvm

        builder = getattr(tvm, info.model_id)
        weights = tvm.get_model_weights(info.model_id).DEFAULT
        try:
            model = builder(weights=weights)
            provenance = "torchvision %s %s" % (torchvision.__version__, weights)
        except Exception as exc:
            warnings.warn(
                "pretrained weights for %s unavailable (%s); using seeded random "
                "initialization" % (info.name, exc)
            )
            torch.manual_seed(0)
            model = builder(weights=None)
            provenance = "torchvision %s %s random-init" % (torchvision.__version__, info.model_id)
        _strip_head(info, model)

    model.eval()
    return model, provenance


def _load_batch(paths, input_size: int) -> torch.Tensor:
    from PIL import Image

    arrays = []
    for path in paths:
        with Image.open(path) as img:
            rgb = img.convert("RGB").resize((input_size, input_size), Image.BILINEAR)
        a = np.asarray(rgb, dtype=np.float32) / 255.0
        a = (a - IMAGENET_MEAN) / IMAGENET_STD
        arrays.append(a.transpose(2, 0, 1))
    return torch.from_numpy(np.stack(arrays))


def extract_features(model, info: ArchInfo, paths, batch_size: int = 16) -> np.ndarray:
    """Run the headless network over the images; rows follow `paths` order."""
    if batch_size < 1:
        raise ExportError("batch_size must be positive")
    chunks = []
    with torch.no_grad():
        for start in range(0, len(paths), batch_size):
            batch = _load_batch(paths[start : start + batch_size], info.input_size)
            out = model(batch)
            if out.ndim != 2 or out.shape[1] != info.feature_dim:
                raise ExportError(
                    "%s produced shape %r, expected (*, %d)"
                    % (info.name, tuple(out.shape), info.feature_dim)
                )
            chunks.append(out.numpy().astype(np.float32))
    return np.vstack(chunks)
