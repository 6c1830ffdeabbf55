"""Flat binary checkpoint container for named tensors.

Layout (all integers little-endian):

====================  ==========================================
bytes                 meaning
====================  ==========================================
``4s``                magic ``b"TNN1"``
``uint32``            tensor count
per tensor:
``uint16``            name length in bytes
``bytes``             UTF-8 name
``3 x uint32``        dims ``(ell, m, n)``
``ell*m*n float64``   values, C order, little-endian
====================  ==========================================

Entry order is preserved on round-trip.  Training writes a sidecar
``<checkpoint>.config`` copy of the resolved run configuration next to
the checkpoint so evaluation can rebuild the architecture.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"TNN1"


class CheckpointError(ValueError):
    """Raised for bad magic, truncation, or malformed entries."""


def save_checkpoint(path, named_tensors: dict[str, np.ndarray]) -> None:
    """Write ``named_tensors`` (each a third-order float64 array)."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(named_tensors)))
        for name, tensor in named_tensors.items():
            arr = np.ascontiguousarray(tensor, dtype=np.float64)
            if arr.ndim != 3:
                raise CheckpointError(f"{name}: tensors must be third-order")
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<III", *arr.shape))
            f.write(arr.astype("<f8").tobytes(order="C"))


def _read_exactly(f, count: int, what: str) -> bytes:
    raw = f.read(count)
    if len(raw) != count:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return raw


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read a checkpoint back into an ordered ``name -> array`` dict."""
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (count,) = struct.unpack("<I", _read_exactly(f, 4, "tensor count"))
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exactly(f, 2, "name length"))
            name = _read_exactly(f, name_len, "name").decode("utf-8")
            dims = struct.unpack("<III", _read_exactly(f, 12, "dims"))
            size = dims[0] * dims[1] * dims[2]
            raw = _read_exactly(f, size * 8, f"values of {name}")
            out[name] = np.frombuffer(raw, dtype="<f8").reshape(dims).copy()
        trailing = f.read(1)
        if trailing:
            raise CheckpointError("trailing bytes after final tensor")
    return out
