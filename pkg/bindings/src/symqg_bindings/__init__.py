"""Thin wrapper exposing build/search/save/load over contiguous float32
arrays, shaped for ann-benchmarks-style harnesses.

Four module-level calls mirror the underlying library one-to-one, with
strict input validation up front (contiguity and element width are checked
before any heavy work starts).  The :class:`SymQG` class packages them in
the usual fit/query protocol.  Index files are byte-compatible with those
the ``symqg`` command line writes, in both directions.

The underlying search and build loops run in compiled nogil code, so a
harness may drive one index from several threads.
"""

from __future__ import annotations

import numpy as np

import symqg

__all__ = ["BoundIndex", "SymQG", "build", "search", "save", "load"]


class BoundIndex:
    """Opaque handle to a built index; hand it to ``search``/``save``."""

    def __init__(self, index: symqg.QGIndex):
        self._index = index

    @property
    def count(self) -> int:
        return self._index.n

    @property
    def dim(self) -> int:
        return self._index.dim


def _require_matrix(array: np.ndarray) -> np.ndarray:
    if not isinstance(array, np.ndarray) or array.ndim != 2:
        raise TypeError("expected a 2-D numpy array")
    if array.dtype != np.float32:
        raise TypeError(f"expected float32 elements, got {array.dtype}")
    if not array.flags.c_contiguous:
        raise TypeError("expected a C-contiguous (row-major) array")
    return array


def build(array: np.ndarray, degree: int = 32, ef: int = 200, iters: int = 3,
          metric: str = "euclidean", seed: int = 42) -> BoundIndex:
    """Construct an index over an (n, dim) float32 row-major array."""
    _require_matrix(array)
    params = symqg.BuildParams(degree=degree, ef=ef, iters=iters,
                               seed=seed, metric=metric)
    return BoundIndex(symqg.build(array, params))


def search(handle: BoundIndex, query: np.ndarray, k: int,
           beam: int) -> tuple[np.ndarray, np.ndarray]:
    """(ids, exact distances) for the k nearest stored vectors, ascending."""
    if beam < 1:
        raise ValueError("beam must be >= 1")
    query = np.asarray(query)
    if query.shape != (handle.dim,):
        raise ValueError(f"query shape {query.shape} != ({handle.dim},)")
    res = symqg.search(handle._index, query.astype(np.float32, copy=False),
                       beam, k)
    return res.ids, res.distances


def save(handle: BoundIndex, path) -> None:
    """Write the index in the shared on-disk format."""
    handle._index.save(path)


def load(path) -> BoundIndex:
    """Read any index in the shared format, including CLI-built files."""
    return BoundIndex(symqg.load(path))


class SymQG:
    """fit/query wrapper following the ann-benchmarks algorithm protocol."""

    def __init__(self, metric: str = "euclidean", degree: int = 32,
                 ef: int = 200, iters: int = 3, seed: int = 42):
        self.metric = metric
        self.degree = degree
        self.ef = ef
        self.iters = iters
        self.seed = seed
        self.beam = 100
        self._handle: BoundIndex | None = None

    def fit(self, X: np.ndarray) -> None:
        self._handle = build(X, degree=self.degree, ef=self.ef,
                             iters=self.iters, metric=self.metric,
                             seed=self.seed)

    def set_query_arguments(self, beam: int) -> None:
        self.beam = int(beam)

    def query(self, v: np.ndarray, n: int) -> np.ndarray:
        ids, _ = search(self._handle, v, n, self.beam)
        return ids

    def batch_query(self, X: np.ndarray, n: int) -> list[np.ndarray]:
        return [self.query(X[i], n) for i in range(X.shape[0])]

    def __str__(self) -> str:
        return (f"SymQG(degree={self.degree}, ef={self.ef}, "
                f"iters={self.iters}, beam={self.beam})")
