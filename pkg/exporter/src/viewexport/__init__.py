"""Image folder -> per-architecture CNN feature views (.fvb + manifest)."""

from .export import ExportSpec, export, read_labels, scan_images
from .fvb import read_fvb, write_fvb
from .models import ARCHITECTURES, ArchInfo, ExportError, build_model, extract_features

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES",
    "ArchInfo",
    "ExportError",
    "ExportSpec",
    "build_model",
    "export",
    "extract_features",
    "read_fvb",
    "read_labels",
    "scan_images",
    "write_fvb",
    "__version__",
]
