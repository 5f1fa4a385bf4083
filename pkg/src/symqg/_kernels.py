"""Compiled hot loops: beam search, all-vertex candidate generation,
occlusion pruning, and degree refinement.

These mirror the contract semantics in ``search`` and ``builder`` exactly,
including float32 evaluation order, so the pure-Python reference path and
the compiled path produce bit-identical traversals.  Everything here is
nogil and cache-compiled; the parallel kernels write only per-vertex slots,
so results are independent of the thread schedule.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

INVALID_ID = np.uint32(0xFFFFFFFF)


@njit(nogil=True, cache=True)
def _sqdist_f32(q, raw, p):
    d2 = np.float32(0.0)
    for t in range(q.shape[0]):
        diff = q[t] - raw[p, t]
        d2 += diff * diff
    return d2


@njit(nogil=True, cache=True)
def search_kernel(raw, neighbors, lanes, bias, scale, q,
                  lut_exact, lut_quant, lut_delta, lut_offset_total,
                  use_quant, entry, nb, multiple, prefetch,
                  out_ids, out_d2):
    """Greedy beam search guided by batched LUT estimates.

    Records every visited vertex id with its exact squared distance into
    ``out_ids`` / ``out_d2`` (in visit order) and returns (visited_count,
    estimate_count).  The beam holds up to ``nb`` (estimate, id) entries
    ordered ascending with ties broken by lower id; with ``multiple`` the
    same unvisited id may occupy several entries.
    """
    n = raw.shape[0]
    R = neighbors.shape[1]
    n_batches = lanes.shape[1]
    seg = lanes.shape[2]

    pool_est = np.empty(nb, dtype=np.float32)
    pool_id = np.empty(nb, dtype=np.int64)
    pool_size = 0
    visited = np.zeros(n, dtype=np.uint8)
    S = np.empty(32, dtype=np.float32)
    Si = np.empty(32, dtype=np.int64)

    pool_est[0] = np.float32(0.0)
    pool_id[0] = entry
    pool_size = 1
    nvis = 0
    nest = 0
    sink = np.float32(0.0)  # keeps the prefetch touch alive

    while True:
        pos = -1
        for i in range(pool_size):
            if visited[pool_id[i]] == 0:
                pos = i
                break
        if pos < 0:
            break
        p = pool_id[pos]
        visited[p] = 1

        d2 = _sqdist_f32(q, raw, p)
        out_ids[nvis] = p
        out_d2[nvis] = d2
        nvis += 1

        for b in range(n_batches):
            if neighbors[p, b * 32] == INVALID_ID:
                break
            if use_quant:
                for k in range(32):
                    Si[k] = 0
                for j in range(seg):
                    for t in range(16):
                        byte = lanes[p, b, j, t]
                        Si[t] += lut_quant[j, byte & 0x0F]
                        Si[t + 16] += lut_quant[j, byte >> 4]
                for k in range(32):
                    S[k] = lut_delta * np.float32(Si[k]) + lut_offset_total
            else:
                for k in range(32):
                    S[k] = np.float32(0.0)
                for j in range(seg):
                    for t in range(16):
                        byte = lanes[p, b, j, t]
                        S[t] += lut_exact[j, byte & 0x0F]
                        S[t + 16] += lut_exact[j, byte >> 4]
            nest += 32

            for k in range(32):
                u = neighbors[p, b * 32 + k]
                if u == INVALID_ID:
                    continue
                ui = np.int64(u)
                if visited[ui] != 0:
                    continue
                est = bias[p, b * 32 + k] + d2 - scale[p, b * 32 + k] * S[k]
                if est < np.float32(0.0):
                    est = np.float32(0.0)
                if not multiple:
                    present = False
                    for i in range(pool_size):
                        if pool_id[i] == ui:
                            present = True
                            break
                    if present:
                        continue
                if pool_size < nb:
                    i = pool_size
                    while i > 0 and (pool_est[i - 1] > est or
                                     (pool_est[i - 1] == est and pool_id[i - 1] > ui)):
                        pool_est[i] = pool_est[i - 1]
                        pool_id[i] = pool_id[i - 1]
                        i -= 1
                    pool_est[i] = est
                    pool_id[i] = ui
                    pool_size += 1
                else:
                    last = nb - 1
                    if est > pool_est[last] or (est == pool_est[last]
                                                and ui >= pool_id[last]):
                        continue
                    i = last
                    while i > 0 and (pool_est[i - 1] > est or
                                     (pool_est[i - 1] == est and pool_id[i - 1] > ui)):
                        pool_est[i] = pool_est[i - 1]
                        pool_id[i] = pool_id[i - 1]
                        i -= 1
                    pool_est[i] = est
                    pool_id[i] = ui

        if prefetch:
            # advisory: touch the block of the next vertex to visit so it is
            # warm in cache; never affects any result
            for i in range(pool_size):
                nxt = pool_id[i]
                if visited[nxt] == 0:
                    sink += raw[nxt, 0] + np.float32(lanes[nxt, 0, 0, 0])
                    break

    if sink == np.float32(np.inf):  # pragma: no cover - keeps sink live
        nest = -nest
    return nvis, nest


@njit(nogil=True, cache=True)
def _order_by_dist_then_id(ids, d2, count):
    """Ascending (d2, id) permutation: stable sort by d2, then order ties by id."""
    perm = np.argsort(d2[:count], kind="mergesort")
    i = 0
    while i < count:
        j = i + 1
        while j < count and d2[perm[j]] == d2[perm[i]]:
            j += 1
        if j - i > 1:
            for a in range(i + 1, j):
                key = perm[a]
                b = a - 1
                while b >= i and ids[perm[b]] > ids[key]:
                    perm[b + 1] = perm[b]
                    b -= 1
                perm[b + 1] = key
        i = j
    return perm


@njit(parallel=True, nogil=True, cache=True)
def candidates_kernel(raw, neighbors, lanes, bias, scale, luts, entry, ef):
    """Per-vertex beam search over the current graph, in parallel.

    For every vertex v, runs the search with its own vector as the query and
    beam size ``ef``, then keeps the ``ef`` closest visited vertices (self
    excluded) ascending by (distance, id).  ``luts`` holds the per-vertex
    exact tables for the rotated vectors.
    """
    n = raw.shape[0]
    cand_ids = np.full((n, ef), -1, dtype=np.int64)
    cand_d2 = np.zeros((n, ef), dtype=np.float32)
    cand_count = np.zeros(n, dtype=np.int64)
    dummy_q = np.zeros((1, 16), dtype=np.uint8)
    for v in prange(n):
        out_ids = np.empty(n, dtype=np.int64)
        out_d2 = np.empty(n, dtype=np.float32)
        nvis, _ = search_kernel(
            raw, neighbors, lanes, bias, scale, raw[v],
            luts[v], dummy_q, np.float32(0.0), np.float32(0.0),
            False, entry, ef, True, True, out_ids, out_d2,
        )
        perm = _order_by_dist_then_id(out_ids, out_d2, nvis)
        m = 0
        for oi in perm:
            u = out_ids[oi]
            if u == v:
                continue
            cand_ids[v, m] = u
            cand_d2[v, m] = out_d2[oi]
            m += 1
            if m == ef:
                break
        cand_count[v] = m
    return cand_ids, cand_d2, cand_count


@njit(nogil=True, cache=True)
def occlusion_prune(raw, ids, d2, count, r, kept_ids, kept_d2,
                    rem_ids, rem_d2):
    """Ascending occlusion scan: keep c unless a kept u is closer to c than
    the source is.  Returns (kept_count, remainder_count)."""
    nk = 0
    nr = 0
    for ci in range(count):
        c = ids[ci]
        dpc = d2[ci]
        ok = True
        if nk == r:
            ok = False
        else:
            for ki in range(nk):
                duc = _sqdist_f32(raw[c], raw, kept_ids[ki])
                if duc < dpc:
                    ok = False
                    break
        if ok:
            kept_ids[nk] = c
            kept_d2[nk] = dpc
            nk += 1
        else:
            rem_ids[nr] = c
            rem_d2[nr] = dpc
            nr += 1
    return nk, nr


@njit(parallel=True, nogil=True, cache=True)
def prune_kernel(raw, cand_ids, cand_d2, cand_count, r):
    """Occlusion-prune every vertex's candidate list in parallel.

    Emits the kept edges (at most r, ascending) and the pruned remainder in
    scan order, both with their exact squared distances.
    """
    n, ef = cand_ids.shape
    kept_ids = np.full((n, r), -1, dtype=np.int64)
    kept_d2 = np.zeros((n, r), dtype=np.float32)
    kept_count = np.zeros(n, dtype=np.int64)
    rem_ids = np.full((n, ef), -1, dtype=np.int64)
    rem_d2 = np.zeros((n, ef), dtype=np.float32)
    rem_count = np.zeros(n, dtype=np.int64)
    for v in prange(n):
        nk, nr = occlusion_prune(
            raw, cand_ids[v], cand_d2[v], cand_count[v], r,
            kept_ids[v], kept_d2[v], rem_ids[v], rem_d2[v],
        )
        kept_count[v] = nk
        rem_count[v] = nr
    return kept_ids, kept_d2, kept_count, rem_ids, rem_d2, rem_count


@njit(nogil=True, cache=True)
def _unit_directions(raw, v, ids, count, out):
    d = raw.shape[1]
    for i in range(count):
        u = ids[i]
        norm2 = np.float32(0.0)
        for t in range(d):
            diff = raw[u, t] - raw[v, t]
            out[i, t] = diff
            norm2 += diff * diff
        if norm2 > np.float32(0.0):
            inv = np.float32(1.0) / np.sqrt(norm2)
            for t in range(d):
                out[i, t] *= inv
        else:
            for t in range(d):
                out[i, t] = np.float32(0.0)


@njit(nogil=True, cache=True)
def _admit_scan(kept_dirs, kept_d2, nk, rem_dirs, rem_d2, nr, cos_t,
                needed, admit_out):
    """One pass of the angle rule at threshold cos_t over the remainder.

    A candidate is admitted when every closer kept edge and every previously
    admitted candidate makes an angle of at least acos(cos_t) with it.
    ``cos_t`` is float64 so the threshold search resolves below float32
    spacing.  Stops once ``needed`` admissions are found (the prefix is
    unaffected by later candidates).  Returns the admitted count.
    """
    d = kept_dirs.shape[1]
    count = 0
    for ci in range(nr):
        dc = rem_d2[ci]
        ok = True
        for ki in range(nk):
            if kept_d2[ki] > dc:
                break
            dot = np.float32(0.0)
            for t in range(d):
                dot += kept_dirs[ki, t] * rem_dirs[ci, t]
            if np.float64(dot) > cos_t:
                ok = False
                break
        if ok:
            for ai in range(count):
                dot = np.float32(0.0)
                for t in range(d):
                    dot += rem_dirs[admit_out[ai], t] * rem_dirs[ci, t]
                if np.float64(dot) > cos_t:
                    ok = False
                    break
        if ok:
            admit_out[count] = ci
            count += 1
            if count == needed:
                break
    return count


@njit(parallel=True, nogil=True, cache=True)
def refine_kernel(raw, sources, kept_ids, kept_d2, kept_count,
                  rem_ids, rem_d2, rem_count, r):
    """Top up each deficient vertex from its pruned remainder.

    Row i describes vertex ``sources[i]``.  Binary-searches the largest
    angle threshold in [60deg, 0deg] (32 halvings on the cosine) that still
    admits enough candidates, then appends the admitted ones ascending by
    distance.  Kept edges are never displaced.  Rows that stay short of r
    (too few candidates even at threshold 0) are left for the caller to fill.
    """
    rows = sources.shape[0]
    d = raw.shape[1]
    out_ids = np.full((rows, r), -1, dtype=np.int64)
    out_count = np.zeros(rows, dtype=np.int64)
    for i in prange(rows):
        v = sources[i]
        nk = kept_count[i]
        for ki in range(nk):
            out_ids[i, ki] = kept_ids[i, ki]
        if nk == r:
            out_count[i] = nk
            continue
        nr = rem_count[i]
        needed = r - nk
        if nr == 0:
            out_count[i] = nk
            continue

        kept_dirs = np.empty((nk, d), dtype=np.float32)
        rem_dirs = np.empty((nr, d), dtype=np.float32)
        _unit_directions(raw, v, kept_ids[i], nk, kept_dirs)
        _unit_directions(raw, v, rem_ids[i], nr, rem_dirs)
        admit = np.empty(nr, dtype=np.int64)
        probe = np.empty(nr, dtype=np.int64)

        lo = 0.5   # cos 60deg: the most restrictive threshold
        hi = 1.0   # cos 0deg: admits everything
        c_lo = _admit_scan(kept_dirs, kept_d2[i], nk, rem_dirs, rem_d2[i],
                           nr, lo, needed, probe)
        if c_lo >= needed:
            t_star = lo
        else:
            c_hi = _admit_scan(kept_dirs, kept_d2[i], nk, rem_dirs, rem_d2[i],
                               nr, hi, needed, probe)
            if c_hi < needed:
                t_star = hi
            else:
                for _ in range(32):
                    mid = 0.5 * (lo + hi)
                    c_mid = _admit_scan(kept_dirs, kept_d2[i], nk, rem_dirs,
                                        rem_d2[i], nr, mid, needed, probe)
                    if c_mid >= needed:
                        hi = mid
                    else:
                        lo = mid
                t_star = hi
        got = _admit_scan(kept_dirs, kept_d2[i], nk, rem_dirs, rem_d2[i],
                          nr, t_star, needed, admit)
        for ai in range(got):
            out_ids[i, nk + ai] = rem_ids[i, admit[ai]]
        out_count[i] = nk + got
    return out_ids, out_count
