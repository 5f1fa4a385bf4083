"""Iterative graph construction with pruning and degree alignment.

The graph starts random and is rebuilt from scratch a few times: each
iteration runs the (estimate-guided) search from every vertex over the
previous graph to collect candidates, then applies the occlusion rule to
select diverse edges.  Previous edges are not carried over.  Afterwards,
vertices left short of the target out-degree R are topped up from their
pruned candidates under an adaptively relaxed angle threshold, so every
out-degree lands exactly on R -- a multiple of the 32-code batch, keeping
every batched estimate fully used.

Candidate generation and pruning read only the previous graph, so each
iteration is embarrassingly parallel across vertices and the result is
independent of processing order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np

from . import _kernels
from .fastscan import BATCH_SIZE, exact_tables
from .qindex import INVALID_ID, QGIndex, assemble
from .rotation import create_rotator

THREADS_ENV = "SYMQG_THREADS"


def configured_threads() -> int:
    """Worker count for parallel build/groundtruth phases."""
    val = os.environ.get(THREADS_ENV, "")
    if val.strip():
        return max(1, int(val))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class BuildParams:
    degree: int = 32        # R: out-degree, multiple of 32
    ef: int = 200           # candidate beam size during construction
    iters: int = 3          # graph adjustment rounds; stable from 3 up
    seed: int = 42
    metric: str = "euclidean"
    refine: bool = True     # degree alignment pass (off only for ablations)

    def validate(self) -> None:
        if self.degree <= 0 or self.degree % BATCH_SIZE != 0:
            raise ValueError(f"degree must be a positive multiple of {BATCH_SIZE}")
        if self.ef < self.degree:
            raise ValueError("ef must be >= degree")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.metric not in ("euclidean", "cosine"):
            raise ValueError("metric must be 'euclidean' or 'cosine'")


def random_init(n: int, degree: int, seed: int) -> np.ndarray:
    """(n, degree) adjacency of distinct non-self ids, deterministic in seed."""
    if n <= degree:
        raise ValueError(f"need n > degree, got n={n} degree={degree}")
    if n - 1 == degree:
        # forced: every other vertex
        adj = np.tile(np.arange(n, dtype=np.int64), (n, 1))
        mask = adj != np.arange(n)[:, None]
        return adj[mask].reshape(n, degree).astype(np.uint32)

    rng = np.random.default_rng(seed)
    adj = rng.integers(0, n - 1, size=(n, degree), dtype=np.int64)
    adj += adj >= np.arange(n)[:, None]  # shift past self
    # rows with repeated ids are rare; redraw them from per-row substreams
    for v in np.nonzero(
        (np.sort(adj, axis=1)[:, 1:] == np.sort(adj, axis=1)[:, :-1]).any(axis=1)
    )[0]:
        row_rng = np.random.default_rng([seed, int(v)])
        pool = row_rng.permutation(n - 1)[:degree]
        pool += pool >= v
        adj[v] = pool
    return adj.astype(np.uint32)


def _random_fill(row_ids: np.ndarray, count: int, n: int, v: int,
                 seed: int, degree: int) -> np.ndarray:
    """Top a short row up to ``degree`` with distinct non-self random ids."""
    have = set(int(x) for x in row_ids[:count])
    rng = np.random.default_rng([seed, 0xF1, v])
    out = row_ids.copy()
    while count < degree:
        cand = int(rng.integers(0, n))
        if cand == v or cand in have:
            continue
        out[count] = cand
        have.add(cand)
        count += 1
    return out


def _entry_point(vectors: np.ndarray) -> int:
    """Vertex nearest the dataset centroid (exact scan, lowest id on ties)."""
    centroid = vectors.mean(axis=0, dtype=np.float64)
    d2 = ((vectors.astype(np.float64) - centroid) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def nsg_prune(vectors: np.ndarray, source: int, candidates, degree: int):
    """Occlusion rule over an ascending candidate list.

    ``candidates`` is a sequence of (id, distance) ascending by distance,
    self-free.  A candidate is kept unless some already-kept edge sits
    closer to it than the source does; at most ``degree`` are kept.
    Returns (kept, remainder), both as (id, distance) lists, remainder in
    scan order for later refinement.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    ids = np.asarray([c[0] for c in candidates], dtype=np.int64)
    dists = np.asarray([c[1] for c in candidates], dtype=np.float32)
    if np.any(np.diff(dists) < 0):
        raise ValueError("candidates must be ascending by distance")
    if np.any(ids == source):
        raise ValueError("candidates must exclude the source vertex")
    kept_ids = np.empty(degree, dtype=np.int64)
    kept_d2 = np.empty(degree, dtype=np.float32)
    rem_ids = np.empty(ids.shape[0], dtype=np.int64)
    rem_d2 = np.empty(ids.shape[0], dtype=np.float32)
    d2 = (dists.astype(np.float64) ** 2).astype(np.float32)
    nk, nr = _kernels.occlusion_prune(
        vectors, ids, d2, ids.shape[0], degree,
        kept_ids, kept_d2, rem_ids, rem_d2)
    kept = [(int(kept_ids[i]), float(np.sqrt(kept_d2[i]))) for i in range(nk)]
    rem = [(int(rem_ids[i]), float(np.sqrt(rem_d2[i]))) for i in range(nr)]
    return kept, rem


def refine_degree(vectors: np.ndarray, source: int, kept, remainder,
                  degree: int, seed: int = 0) -> list[int]:
    """Exactly ``degree`` neighbors: kept edges plus angle-admitted extras.

    Scans the pruned remainder ascending by distance under the largest angle
    threshold in [0, 60deg] (binary-searched on the cosine) that still
    yields enough admissions; falls back to deterministic random ids when
    even a zero threshold leaves the vertex short.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n = vectors.shape[0]
    if len(kept) > degree:
        raise ValueError("kept list longer than target degree")
    kept_ids = np.full((1, degree), -1, dtype=np.int64)
    kept_d2 = np.zeros((1, degree), dtype=np.float32)
    for i, (u, d) in enumerate(kept):
        kept_ids[0, i] = u
        kept_d2[0, i] = np.float32(d) ** 2
    m = len(remainder)
    rem_ids = np.full((1, max(m, 1)), -1, dtype=np.int64)
    rem_d2 = np.zeros((1, max(m, 1)), dtype=np.float32)
    for i, (u, d) in enumerate(remainder):
        rem_ids[0, i] = u
        rem_d2[0, i] = np.float32(d) ** 2
    out_ids, out_count = _kernels.refine_kernel(
        vectors, np.asarray([source], dtype=np.int64),
        kept_ids, kept_d2, np.asarray([len(kept)], dtype=np.int64),
        rem_ids, rem_d2, np.asarray([m], dtype=np.int64), degree)
    row = out_ids[0]
    count = int(out_count[0])
    if count < degree:
        row = _random_fill(row, count, n, source, seed, degree)
    return [int(x) for x in row]


def build(vectors: np.ndarray, params: BuildParams,
          lut_mode: str = "exact") -> QGIndex:
    """Construct the full index for a vector set."""
    params.validate()
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2:
        raise ValueError("vectors must be a 2-D array")
    n, dim = vectors.shape
    if n <= params.degree:
        raise ValueError(f"need n > degree, got n={n} degree={params.degree}")

    if params.metric == "cosine":
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        vectors = (vectors / norms).astype(np.float32)

    numba.set_num_threads(min(configured_threads(), numba.config.NUMBA_NUM_THREADS))

    rotator = create_rotator(params.seed, dim)
    entry = _entry_point(vectors)
    degree = params.degree
    adjacency = random_init(n, degree, params.seed)

    kept = rem = None
    for _ in range(params.iters):
        index = assemble(vectors, adjacency, rotator, params.metric, entry)
        rotated = rotator.apply_batch(vectors)
        luts = exact_tables(rotated)
        cand_ids, cand_d2, cand_count = _kernels.candidates_kernel(
            index.raw, index.neighbors, index.lanes, index.bias, index.scale,
            luts, entry, params.ef)
        kept_ids, kept_d2, kept_count, rem_ids, rem_d2, rem_count = (
            _kernels.prune_kernel(vectors, cand_ids, cand_d2, cand_count, degree))
        adjacency = np.full((n, degree), INVALID_ID, dtype=np.uint32)
        cols = np.arange(degree)[None, :]
        mask = cols < kept_count[:, None]
        adjacency[mask] = kept_ids[:, :degree][mask].astype(np.uint32)
        kept = (kept_ids, kept_d2, kept_count)
        rem = (rem_ids, rem_d2, rem_count)

    if params.refine:
        out_ids, out_count = _kernels.refine_kernel(
            vectors, np.arange(n, dtype=np.int64),
            kept[0], kept[1], kept[2], rem[0], rem[1], rem[2], degree)
        for v in np.nonzero(out_count < degree)[0]:
            out_ids[v] = _random_fill(
                out_ids[v], int(out_count[v]), n, int(v), params.seed, degree)
        adjacency = out_ids.astype(np.uint32)

    return assemble(vectors, adjacency, rotator, params.metric, entry,
                    lut_mode=lut_mode)
