"""Readers and writers for the record-per-vector binary formats.

Each record is a little-endian 32-bit count d followed by d values: IEEE-754
float32 for .fvecs, int32 for .ivecs.  Every record in a file must declare
the same d, so file size is exactly count * (4 + 4 * dim) bytes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

_DTYPES = {"float": "<f4", "int": "<i4"}


@dataclass(eq=False)
class DatasetFile:
    path: str
    count: int
    dim: int
    payload: np.ndarray  # (count, dim)


def read_vecs(path, kind: str = "float") -> DatasetFile:
    """Load an .fvecs / .ivecs file; empty files load as count=0."""
    if kind not in _DTYPES:
        raise ValueError(f"kind must be one of {sorted(_DTYPES)}")
    path = str(path)
    data = np.fromfile(path, dtype=np.uint8)
    if data.size == 0:
        warnings.warn(f"{path}: empty vector file", stacklevel=2)
        return DatasetFile(path=path, count=0, dim=0,
                           payload=np.empty((0, 0), dtype=_DTYPES[kind]))
    if data.size < 4:
        raise FormatError(f"{path}: truncated record at byte offset 0")
    dim = int(data[:4].view("<i4")[0])
    if dim <= 0:
        raise FormatError(f"{path}: bad dimension {dim} at byte offset 0")
    record = 4 + 4 * dim
    count, tail = divmod(data.size, record)
    if tail != 0:
        raise FormatError(
            f"{path}: truncated record at byte offset {count * record}")
    table = data.reshape(count, record)
    dims = table[:, :4].copy().view("<i4").ravel()
    bad = np.nonzero(dims != dim)[0]
    if bad.size:
        raise FormatError(
            f"{path}: inconsistent dimension {int(dims[bad[0]])} != {dim} "
            f"at byte offset {int(bad[0]) * record}")
    payload = table[:, 4:].copy().view(_DTYPES[kind]).reshape(count, dim)
    return DatasetFile(path=path, count=count, dim=dim, payload=payload)


def write_vecs(path, payload: np.ndarray, kind: str = "float") -> None:
    """Write a (count, dim) array in the record-per-vector format."""
    if kind not in _DTYPES:
        raise ValueError(f"kind must be one of {sorted(_DTYPES)}")
    payload = np.asarray(payload)
    if payload.ndim != 2:
        raise ValueError("payload must be 2-D")
    count, dim = payload.shape
    out = np.empty((count, 4 + 4 * dim), dtype=np.uint8)
    out[:, :4] = np.full(count, dim, dtype="<i4")[:, None].view(np.uint8)
    out[:, 4:] = payload.astype(_DTYPES[kind]).view(np.uint8)
    Path(path).write_bytes(out.tobytes())
