"""Greedy beam search with batched estimates and implicit re-ranking.

Traversal is guided by quantized-code distance estimates, evaluated a batch
at a time from each visited vertex's block.  Visiting a vertex requires its
exact distance anyway (the estimates for its neighbors are relative to it),
so that exact distance feeds the running top-K directly: results need no
terminal re-ranking pass, and every returned distance is exact.

An unvisited vertex may sit in the beam several times with different
estimates, one per estimating neighbor context; an under-estimate from any
context is enough to get a true neighbor visited.  Disable
``multiple_estimates`` to keep only the first estimate per vertex.

Two interchangeable paths: a compiled kernel (the default) and a pure-Python
reference built on :class:`BeamPool` and the scalar contract ops.  Both use
identical float32 evaluation order and produce identical traversals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fastscan import QueryLut, build_query_lut
from .qindex import INVALID_ID, QGIndex


@dataclass
class SearchResult:
    ids: np.ndarray          # (k,) int64, ascending by (distance, id)
    distances: np.ndarray    # (k,) float64, exact distances
    visited_count: int
    estimate_count: int
    truncated: bool          # fewer than K results were available

    def __iter__(self):
        return iter(zip(self.ids.tolist(), self.distances.tolist()))


class BeamPool:
    """Bounded candidate set ordered ascending by (estimate, id).

    Duplicate entries for one id are permitted unless ``allow_duplicates``
    is off.  Once any entry for an id has been popped (visited), no new
    entry for that id is accepted.  Insertion into a full pool evicts the
    worst entry only when the newcomer is strictly better; the capacity
    bound counts duplicates.
    """

    def __init__(self, capacity: int, allow_duplicates: bool = True):
        if capacity < 1:
            raise ValueError("pool capacity must be >= 1")
        self.capacity = capacity
        self.allow_duplicates = allow_duplicates
        self.entries: list[list] = []  # [est, id, visited_flag]
        self._visited: set[int] = set()

    def __len__(self) -> int:
        return len(self.entries)

    def is_visited(self, vid: int) -> bool:
        return vid in self._visited

    def _position(self, est: float, vid: int) -> int:
        lo, hi = 0, len(self.entries)
        while lo < hi:
            mid = (lo + hi) // 2
            e = self.entries[mid]
            if e[0] < est or (e[0] == est and e[1] <= vid):
                lo = mid + 1
            else:
                hi = mid
        return lo

    def insert(self, est: float, vid: int) -> bool:
        """Offer an entry; returns whether it was admitted."""
        if vid in self._visited:
            return False
        if not self.allow_duplicates:
            for e in self.entries:
                if e[1] == vid:
                    return False
        if len(self.entries) == self.capacity:
            worst = self.entries[-1]
            if not (est < worst[0] or (est == worst[0] and vid < worst[1])):
                return False
            self.entries.pop()
        self.entries.insert(self._position(est, vid), [est, vid, False])
        return True

    def best_unvisited(self):
        """Peek the next entry to visit without marking it, or None."""
        for e in self.entries:
            if not e[2]:
                if e[1] in self._visited:
                    e[2] = True
                    continue
                return (e[0], e[1])
        return None

    def pop_best_unvisited(self):
        """Mark and return the best unvisited entry, or None when drained."""
        for e in self.entries:
            if not e[2]:
                if e[1] in self._visited:
                    e[2] = True  # stale duplicate of an already-visited id
                    continue
                e[2] = True
                self._visited.add(e[1])
                return (e[0], e[1])
        return None


def prefetch_next(pool: BeamPool):
    """Advisory hint naming the block that will be visited next, if any.

    Issuing or ignoring the hint never changes results; in this
    implementation it only names the block so a caller may warm it.
    """
    nxt = pool.best_unvisited()
    return None if nxt is None else nxt[1]


def _scalar_lut_sum(lanes_vb: np.ndarray, k: int, lut: QueryLut,
                    use_quantized: bool) -> float:
    """Sequential per-code LUT walk, matching the kernel's accumulation."""
    seg = lanes_vb.shape[0]
    col = k & 15
    shift = 4 if k >= 16 else 0
    if use_quantized:
        total = 0
        for j in range(seg):
            total += int(lut.quantized[j, (lanes_vb[j, col] >> shift) & 0x0F])
        return float(np.float32(lut.delta) * np.float32(total)
                     + np.float32(lut.offset_total))
    s = np.float32(0.0)
    for j in range(seg):
        s = s + lut.exact[j, (lanes_vb[j, col] >> shift) & 0x0F]
    return float(s)


def _sqdist_f32_py(q: np.ndarray, x: np.ndarray) -> float:
    d2 = np.float32(0.0)
    for t in range(q.shape[0]):
        diff = q[t] - x[t]
        d2 = d2 + diff * diff
    return float(d2)


def _search_reference(index: QGIndex, q: np.ndarray, n_b: int, lut: QueryLut,
                      multiple: bool, use_quantized: bool):
    """Pure-Python traversal over BeamPool; the oracle for the kernel."""
    pool = BeamPool(n_b, allow_duplicates=multiple)
    pool.insert(0.0, index.entry_point)
    visited_ids: list[int] = []
    visited_d2: list[float] = []
    nest = 0
    while True:
        nxt = pool.pop_best_unvisited()
        if nxt is None:
            break
        p = nxt[1]
        d2 = _sqdist_f32_py(q, index.raw[p])
        visited_ids.append(p)
        visited_d2.append(d2)
        for b in range(index.batch_count):
            base = b * 32
            if index.neighbors[p, base] == INVALID_ID:
                break
            nest += 32
            for k in range(32):
                u = index.neighbors[p, base + k]
                if u == INVALID_ID:
                    continue
                u = int(u)
                if pool.is_visited(u):
                    continue
                s_k = _scalar_lut_sum(index.lanes[p, b], k, lut, use_quantized)
                est = (np.float32(index.bias[p, base + k]) + np.float32(d2)
                       - np.float32(index.scale[p, base + k]) * np.float32(s_k))
                est = max(float(est), 0.0)
                pool.insert(est, u)
    return (np.asarray(visited_ids, dtype=np.int64),
            np.asarray(visited_d2, dtype=np.float32),
            nest)


def search(
    index: QGIndex,
    query: np.ndarray,
    n_b: int,
    k: int,
    multiple_estimates: bool = True,
    use_quantized: bool | None = None,
    prefetch: bool = True,
    reference: bool = False,
) -> SearchResult:
    """Return the K nearest stored vectors by exact distance, ascending.

    ``n_b`` is the beam size.  K > n_b is allowed but flagged: the result is
    drawn from whatever was visited and may hold fewer than K entries, with
    ``truncated`` set accordingly.
    """
    if index.n == 0:
        raise ValueError("index is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_b < 1:
        raise ValueError("beam size must be >= 1")
    query = np.asarray(query, dtype=np.float32)
    if query.shape != (index.dim,):
        raise ValueError(f"query shape {query.shape} != ({index.dim},)")
    if k > n_b:
        warnings.warn(f"k={k} exceeds beam size n_b={n_b}; "
                      "results may be truncated", stacklevel=2)
    if use_quantized is None:
        use_quantized = index.lut_mode == "quantized"

    if index.metric == "cosine":
        norm = float(np.linalg.norm(query))
        if norm > 0.0:
            query = query / np.float32(norm)

    rotated = index.rotator.apply(query)
    lut = build_query_lut(rotated)

    if reference:
        ids, d2, nest = _search_reference(
            index, query, n_b, lut, multiple_estimates, use_quantized)
        nvis = ids.shape[0]
    else:
        ids = np.empty(index.n, dtype=np.int64)
        d2 = np.empty(index.n, dtype=np.float32)
        nvis, nest = _kernels.search_kernel(
            index.raw, index.neighbors, index.lanes, index.bias, index.scale,
            query, lut.exact, lut.quantized,
            np.float32(lut.delta), np.float32(lut.offset_total),
            use_quantized, index.entry_point, n_b,
            multiple_estimates, prefetch, ids, d2,
        )
        ids = ids[:nvis]
        d2 = d2[:nvis]

    order = np.lexsort((ids, d2))[:k]
    top_ids = ids[order]
    # exact distances of the selected ids at float64 for reporting; the
    # float32 traversal values only drove the selection
    diffs = index.raw[top_ids].astype(np.float64) - query.astype(np.float64)
    d2_exact = (diffs ** 2).sum(axis=1)
    fine = np.lexsort((top_ids, d2_exact))
    return SearchResult(
        ids=top_ids[fine], distances=np.sqrt(d2_exact[fine]),
        visited_count=int(nvis), estimate_count=int(nest),
        truncated=top_ids.shape[0] < k,
    )
