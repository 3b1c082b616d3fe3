"""Writer for the .fvb feature-view interchange format.

Layout: magic b"FVB1", little-endian uint32 N, uint32 d, then N*d
little-endian IEEE-754 32-bit floats, row-major.  A dataset is a JSON
manifest referencing one .fvb per view, an optional labels file (one
integer per line), and a sample-id file (one id per line), all relative
to the manifest's directory.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

FVB_MAGIC = b"FVB1"


def write_fvb(path, matrix) -> None:
    a = np.ascontiguousarray(np.asarray(matrix), dtype="<f4")
    if a.ndim != 2:
        raise ValueError(".fvb files hold 2-D matrices, got ndim=%d" % a.ndim)
    n, d = a.shape
    with open(path, "wb") as fh:
        fh.write(FVB_MAGIC)
        fh.write(struct.pack("<II", n, d))
        fh.write(a.tobytes())


def read_fvb(path) -> np.ndarray:
    """Read back as float32; used only to sanity-check our own output."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != FVB_MAGIC:
        raise ValueError("malformed header in %s" % path)
    n, d = struct.unpack("<II", raw[4:12])
    if len(raw) != 12 + 4 * n * d:
        raise ValueError("truncated view file %s" % path)
    return np.frombuffer(raw, dtype="<f4", offset=12).reshape(n, d).copy()
