"""Batched LUT evaluation over 4-bit sub-codes, 32 codes at a time.

The rotated query is split into D'/4 segments of 4 coordinates.  For each
segment, the signed sum over those 4 coordinates has only 2^4 possible
values, which are precomputed into a per-query table.  A code's inner
product with the bi-valued codebook vector is then the sum of one table
entry per segment, and 32 codes are evaluated together from an interleaved
byte layout (the shuffle-friendly arrangement of the packed lanes).

Packed layout, bit-exact and little-endian: segments stored in ascending
order, 16 bytes per segment; byte t holds code t's sub-code in the low
nibble and code (t+16)'s sub-code in the high nibble.  Bit i of a sub-code
corresponds to coordinate 4j+i of segment j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BATCH_SIZE = 32

# bit i of nibble b, as (16, 4) matrices in both 0/1 and +-1 form
_NIBBLE_BITS = ((np.arange(16)[:, None] >> np.arange(4)[None, :]) & 1).astype(np.float32)
_NIBBLE_SIGNS = _NIBBLE_BITS * 2.0 - 1.0


@dataclass(frozen=True, eq=False)
class PackedBatch:
    """Up to 32 codes in the interleaved 4-bit lane layout.

    ``lanes`` has shape (seg_count, 16) uint8; positions >= ``count`` are
    padding (all-zero codes) whose results must be discarded by callers.
    """

    lanes: np.ndarray
    count: int

    @property
    def seg_count(self) -> int:
        return self.lanes.shape[0]

    def tobytes(self) -> bytes:
        return self.lanes.tobytes()


@dataclass(frozen=True, eq=False)
class QueryLut:
    """Per-query tables of the 16 signed partial sums for every segment.

    ``exact`` is the float table; ``quantized`` an 8-bit table with one
    affine range for the whole table: entry ~= quantized * delta + offset,
    and a full 32-code sum reconstructs as delta * int_sum + offset_total.
    """

    exact: np.ndarray       # (seg_count, 16) float32
    quantized: np.ndarray   # (seg_count, 16) uint8
    delta: float
    offset: float           # per-entry offset (table minimum)

    @property
    def seg_count(self) -> int:
        return self.exact.shape[0]

    @property
    def offset_total(self) -> float:
        return float(np.float32(self.seg_count) * np.float32(self.offset))


def subcodes_from_bits(bits: np.ndarray) -> np.ndarray:
    """(m, D') bit rows -> (m, D'/4) nibble rows, bit i <- coordinate 4j+i."""
    bits = np.asarray(bits, dtype=np.uint8)
    return (bits[:, 0::4]
            | (bits[:, 1::4] << 1)
            | (bits[:, 2::4] << 2)
            | (bits[:, 3::4] << 3)).astype(np.uint8)


def lanes_from_subcodes(sub: np.ndarray) -> np.ndarray:
    """(32, seg_count) sub-codes -> (seg_count, 16) interleaved lane bytes."""
    return (sub[:16] | (sub[16:] << 4)).T.copy()


def pack_codes(bits: np.ndarray) -> PackedBatch:
    """Pack 1..32 codes of D' bits each; short batches pad with zero codes."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[0] > BATCH_SIZE:
        raise ValueError("pack_codes expects between 1 and 32 code rows")
    count, dp = bits.shape
    if dp % 4 != 0:
        raise ValueError(f"code length {dp} is not a multiple of 4")
    full = np.zeros((BATCH_SIZE, dp), dtype=np.uint8)
    full[:count] = bits != 0
    lanes = lanes_from_subcodes(subcodes_from_bits(full))
    return PackedBatch(lanes=lanes, count=count)


def unpack_codes(batch: PackedBatch) -> np.ndarray:
    """Recover the full (32, D') bit matrix, padding rows included (zeros)."""
    lanes = batch.lanes
    seg = lanes.shape[0]
    sub = np.empty((BATCH_SIZE, seg), dtype=np.uint8)
    sub[:16] = (lanes & 0x0F).T
    sub[16:] = (lanes >> 4).T
    bits = np.empty((BATCH_SIZE, seg * 4), dtype=np.uint8)
    for i in range(4):
        bits[:, i::4] = (sub >> i) & 1
    return bits


def exact_tables(q_rows: np.ndarray) -> np.ndarray:
    """Exact LUTs for a stack of rotated vectors: (m, D') -> (m, D'/4, 16).

    Entries are built from the 0/1 subset sums (2 * sum-over-set-bits minus
    the segment total), which equals the +-1 formulation while sharing the
    prefix work across the 16 entries of a segment.
    """
    q_rows = np.asarray(q_rows, dtype=np.float32)
    m, dp = q_rows.shape
    seg = dp // 4
    qs = q_rows.reshape(m, seg, 4)
    subset = qs @ _NIBBLE_BITS.T                   # (m, seg, 16) set-bit sums
    total = qs.sum(axis=2, dtype=np.float32)
    return ((2.0 * subset - total[..., None])
            * np.float32(1.0 / np.sqrt(dp))).astype(np.float32)


def build_query_lut(q_prime: np.ndarray) -> QueryLut:
    """Tables for <xbar, q'> where q' is the rotated raw query (length D')."""
    q_prime = np.asarray(q_prime, dtype=np.float32)
    if q_prime.ndim != 1 or q_prime.shape[0] % 4 != 0:
        raise ValueError("rotated query length must be a multiple of 4")
    exact = exact_tables(q_prime[None, :])[0]

    lo = float(exact.min())
    hi = float(exact.max())
    if hi > lo:
        delta = (hi - lo) / 255.0
        quantized = np.rint((exact - np.float32(lo)) / np.float32(delta))
        quantized = np.clip(quantized, 0, 255).astype(np.uint8)
    else:
        delta = 0.0
        quantized = np.zeros_like(exact, dtype=np.uint8)
    return QueryLut(exact=exact, quantized=quantized, delta=delta, offset=lo)


def batch_estimate(
    batch: PackedBatch, lut: QueryLut, use_quantized: bool = False
) -> np.ndarray:
    """The 32 sums S_k = sum_j table[j][subcode(k, j)], as float32.

    With the exact table, S_k equals <xbar_k, q'> up to float summation; with
    the quantized table each S_k is within seg_count * delta / 2 of the exact
    value.  Integer accumulation cannot overflow below seg_count = 1024.
    Padding positions are computed but meaningless; callers discard them.
    """
    if batch.seg_count != lut.seg_count:
        raise ValueError(
            f"segment count mismatch: batch has {batch.seg_count}, "
            f"LUT has {lut.seg_count}"
        )
    lanes = batch.lanes
    seg = lanes.shape[0]
    lo = lanes & 0x0F
    hi = lanes >> 4
    rows = np.arange(seg)[:, None]
    out = np.empty(BATCH_SIZE, dtype=np.float32)
    if use_quantized:
        table = lut.quantized.astype(np.int64)
        out[:16] = (np.float32(lut.delta) * table[rows, lo].sum(axis=0)
                    + np.float32(lut.offset_total))
        out[16:] = (np.float32(lut.delta) * table[rows, hi].sum(axis=0)
                    + np.float32(lut.offset_total))
    else:
        out[:16] = lut.exact[rows, lo].sum(axis=0, dtype=np.float32)
        out[16:] = lut.exact[rows, hi].sum(axis=0, dtype=np.float32)
    return out
