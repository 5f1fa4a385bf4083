"""Index data model: one contiguous record per vertex, plus persistence.

Every vertex owns a fixed-size block holding, in order: its raw vector,
its R neighbor ids, the packed codes of those neighbors in 32-code batches,
and the per-neighbor (bias, scale) factor pairs.  The codes are quantized
against the block's own vector, so a vector that neighbors two different
vertices carries a different code on each side.

File format (little-endian, no padding between fields):

    magic        8 bytes   b"SYMQG\\x00\\x00\\x01"
    n            u32
    dim          u32       D
    padded_dim   u32       D'
    degree       u32       R (multiple of 32)
    metric       u32       0 = euclidean, 1 = cosine
    entry_point  u32
    rotator_seed u64
    rotator_rounds u32
    lut_mode     u32       0 = exact, 1 = quantized
    blocks       n records of constant stride 4D + 4R + R*D'/8 + 8R bytes:
                 raw (D f32) | neighbors (R u32) | packed (R/32 batches of
                 16 * D'/4 bytes) | bias (R f32) | scale (R f32)

Neighbor slots past a vertex's actual degree hold INVALID_ID with all-zero
codes and zero factors; a fully refined graph has none.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError
from .fastscan import (BATCH_SIZE, PackedBatch, lanes_from_subcodes,
                       subcodes_from_bits, unpack_codes)
from .quantizer import quantize_batch
from .rotation import Rotator, create_rotator

MAGIC = b"SYMQG\x00\x00\x01"
HEADER_SIZE = 48
INVALID_ID = np.uint32(0xFFFFFFFF)

METRICS = ("euclidean", "cosine")
LUT_MODES = ("exact", "quantized")

# vertices per chunk during assembly; bounds peak memory at large n
_ASSEMBLE_CHUNK = 2048


@dataclass(eq=False)
class QGIndex:
    """Immutable after assembly; shared read-only by concurrent searches."""

    dim: int
    padded_dim: int
    degree: int
    metric: str
    entry_point: int
    rotator: Rotator
    lut_mode: str
    raw: np.ndarray        # (n, D) float32
    neighbors: np.ndarray  # (n, R) uint32, INVALID_ID in pad slots
    lanes: np.ndarray      # (n, R/32, D'/4, 16) uint8
    bias: np.ndarray       # (n, R) float32
    scale: np.ndarray      # (n, R) float32

    def __post_init__(self):
        for a in (self.raw, self.neighbors, self.lanes, self.bias, self.scale):
            a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def batch_count(self) -> int:
        return self.degree // BATCH_SIZE

    @property
    def seg_count(self) -> int:
        return self.padded_dim // 4

    @property
    def block_stride(self) -> int:
        d, r, dp = self.dim, self.degree, self.padded_dim
        return 4 * d + 4 * r + r * dp // 8 + 8 * r

    def degrees(self) -> np.ndarray:
        """Actual out-degree per vertex (pad slots excluded)."""
        return (self.neighbors != INVALID_ID).sum(axis=1)

    def packed_batch(self, v: int, b: int) -> PackedBatch:
        nbrs = self.neighbors[v, b * BATCH_SIZE:(b + 1) * BATCH_SIZE]
        count = int((nbrs != INVALID_ID).sum())
        return PackedBatch(lanes=self.lanes[v, b], count=count)

    def neighbor_code_bits(self, v: int) -> np.ndarray:
        """(R, D') bit matrix of vertex v's neighbor codes, pads zeroed."""
        return np.concatenate(
            [unpack_codes(self.packed_batch(v, b)) for b in range(self.batch_count)]
        )

    def save(self, path) -> None:
        save(self, path)

    def stats(self) -> dict:
        return stats(self)


def _validate_adjacency(neighbors: np.ndarray, n: int) -> None:
    """Degree slots must hold real ids first, then INVALID_ID; real ids must
    be in range, non-self, and unique per vertex."""
    for v in range(n):
        row = neighbors[v]
        valid = row != INVALID_ID
        if np.any(valid[1:] & ~valid[:-1]):
            raise ValueError(f"vertex {v}: pad slots must trail real neighbors")
        ids = row[valid]
        if np.any(ids == v):
            raise ValueError(f"vertex {v}: adjacency contains a self edge")
        if np.any(ids >= n):
            raise ValueError(f"vertex {v}: neighbor id out of range")
        if np.unique(ids).size != ids.size:
            raise ValueError(f"vertex {v}: duplicate neighbor ids")


def normalize_adjacency(adjacency, n: int, degree: int) -> np.ndarray:
    """Accept (n, R) arrays or per-vertex id lists; return uint32 with pads."""
    out = np.full((n, degree), INVALID_ID, dtype=np.uint32)
    if isinstance(adjacency, np.ndarray) and adjacency.ndim == 2:
        if adjacency.shape != (n, degree):
            raise ValueError(
                f"adjacency shape {adjacency.shape} != ({n}, {degree})"
            )
        out[:] = adjacency.astype(np.uint32, copy=False)
    else:
        for v, row in enumerate(adjacency):
            ids = np.asarray(row, dtype=np.uint32)
            if ids.size > degree:
                raise ValueError(f"vertex {v}: more than {degree} neighbors")
            out[v, : ids.size] = ids
    return out


def assemble(
    vectors: np.ndarray,
    adjacency,
    rotator: Rotator,
    metric: str = "euclidean",
    entry_point: int = 0,
    lut_mode: str = "exact",
) -> QGIndex:
    """Quantize every vertex's neighbor residuals and pack them into batches.

    ``adjacency`` rows shorter than the degree are padded; pad slots hold
    INVALID_ID, all-zero codes, and zero factors.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n, dim = vectors.shape
    if dim != rotator.dim:
        raise ValueError(f"vectors have dim {dim}, rotator expects {rotator.dim}")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    if lut_mode not in LUT_MODES:
        raise ValueError(f"lut_mode must be one of {LUT_MODES}")

    if isinstance(adjacency, np.ndarray) and adjacency.ndim == 2:
        degree = adjacency.shape[1]
    else:
        degree = max((len(r) for r in adjacency), default=0)
        degree = max(BATCH_SIZE, -(-degree // BATCH_SIZE) * BATCH_SIZE)
    if degree <= 0 or degree % BATCH_SIZE != 0:
        raise ValueError(f"degree {degree} must be a positive multiple of {BATCH_SIZE}")
    if not (0 <= entry_point < n):
        raise ValueError(f"entry point {entry_point} out of range for n={n}")

    neighbors = normalize_adjacency(adjacency, n, degree)
    _validate_adjacency(neighbors, n)

    dp = rotator.padded_dim
    batches = degree // BATCH_SIZE
    seg = dp // 4
    lanes = np.zeros((n, batches, seg, 16), dtype=np.uint8)
    bias = np.zeros((n, degree), dtype=np.float32)
    scale = np.zeros((n, degree), dtype=np.float32)

    rotated_centers = rotator.apply_batch(vectors)

    for start in range(0, n, _ASSEMBLE_CHUNK):
        stop = min(start + _ASSEMBLE_CHUNK, n)
        nb_chunk = neighbors[start:stop]
        vtx, slot = np.nonzero(nb_chunk != INVALID_ID)
        full_bits = np.zeros(((stop - start) * degree, dp), dtype=np.uint8)
        if vtx.size:
            ids = nb_chunk[vtx, slot].astype(np.int64)
            residuals = vectors[ids] - vectors[start + vtx]
            bits, b_v, s_v = quantize_batch(
                rotator, residuals, rotated_centers[start + vtx]
            )
            full_bits[vtx * degree + slot] = bits
            bias[start + vtx, slot] = b_v
            scale[start + vtx, slot] = s_v
        sub = subcodes_from_bits(full_bits).reshape(
            stop - start, batches, BATCH_SIZE, seg
        )
        lanes[start:stop] = (
            sub[:, :, :16, :] | (sub[:, :, 16:, :] << 4)
        ).transpose(0, 1, 3, 2)

    return QGIndex(
        dim=dim, padded_dim=dp, degree=degree, metric=metric,
        entry_point=int(entry_point), rotator=rotator, lut_mode=lut_mode,
        raw=vectors.copy(), neighbors=neighbors,
        lanes=lanes, bias=bias, scale=scale,
    )


def save(index: QGIndex, path) -> None:
    """Write the header and the constant-stride blocks, little-endian."""
    n = index.n
    header = bytearray()
    header += MAGIC
    header += np.array(
        [n, index.dim, index.padded_dim, index.degree,
         METRICS.index(index.metric), index.entry_point],
        dtype="<u4").tobytes()
    header += np.array([index.rotator.seed], dtype="<u8").tobytes()
    header += np.array(
        [index.rotator.rounds, LUT_MODES.index(index.lut_mode)],
        dtype="<u4").tobytes()
    assert len(header) == HEADER_SIZE

    d, r = index.dim, index.degree
    code_bytes = r * index.padded_dim // 8
    blocks = np.empty((n, index.block_stride), dtype=np.uint8)
    pos = 0
    for arr, width in (
        (index.raw.astype("<f4", copy=False), 4 * d),
        (index.neighbors.astype("<u4", copy=False), 4 * r),
        (index.lanes, code_bytes),
        (index.bias.astype("<f4", copy=False), 4 * r),
        (index.scale.astype("<f4", copy=False), 4 * r),
    ):
        blocks[:, pos:pos + width] = arr.reshape(n, -1).view(np.uint8)
        pos += width

    with open(path, "wb") as f:
        f.write(bytes(header))
        f.write(blocks.tobytes())


def load(path) -> QGIndex:
    """Read an index file; bit-identical round trip with ``save``."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < HEADER_SIZE:
        raise IOError(f"truncated index file: {len(data)} bytes, need header of {HEADER_SIZE}")
    if data[:8] != MAGIC:
        raise FormatError(f"bad magic {data[:8]!r}; not an index file or wrong version")

    u32 = np.frombuffer(data, dtype="<u4", count=6, offset=8)
    n, dim, dp, degree, metric_i, entry = (int(x) for x in u32)
    seed = int(np.frombuffer(data, dtype="<u8", count=1, offset=32)[0])
    rounds, lut_i = (int(x) for x in np.frombuffer(data, dtype="<u4", count=2, offset=40))
    if metric_i >= len(METRICS) or lut_i >= len(LUT_MODES):
        raise FormatError(f"bad enum values metric={metric_i} lut_mode={lut_i}")
    if degree <= 0 or degree % BATCH_SIZE != 0 or (n > 0 and entry >= n):
        raise FormatError(f"inconsistent header: n={n} degree={degree} entry={entry}")

    rotator = create_rotator(seed, dim, rounds)
    if rotator.padded_dim != dp:
        raise FormatError(f"header padded_dim {dp} != derived {rotator.padded_dim}")

    d, r = dim, degree
    stride = 4 * d + 4 * r + r * dp // 8 + 8 * r
    expected = HEADER_SIZE + n * stride
    if len(data) != expected:
        raise IOError(f"truncated index file: {len(data)} bytes, expected {expected}")

    blocks = np.frombuffer(data, dtype=np.uint8, offset=HEADER_SIZE).reshape(n, stride)
    pos = 0
    raw = blocks[:, pos:pos + 4 * d].copy().view("<f4").reshape(n, d); pos += 4 * d
    neighbors = blocks[:, pos:pos + 4 * r].copy().view("<u4").reshape(n, r); pos += 4 * r
    code_bytes = r * dp // 8
    lanes = blocks[:, pos:pos + code_bytes].copy().reshape(
        n, r // BATCH_SIZE, dp // 4, 16); pos += code_bytes
    bias = blocks[:, pos:pos + 4 * r].copy().view("<f4").reshape(n, r); pos += 4 * r
    scale = blocks[:, pos:pos + 4 * r].copy().view("<f4").reshape(n, r)

    return QGIndex(
        dim=dim, padded_dim=dp, degree=degree, metric=METRICS[metric_i],
        entry_point=entry, rotator=rotator, lut_mode=LUT_MODES[lut_i],
        raw=raw.astype(np.float32, copy=False),
        neighbors=neighbors.astype(np.uint32, copy=False),
        lanes=lanes, bias=bias.astype(np.float32, copy=False),
        scale=scale.astype(np.float32, copy=False),
    )


def stats(index: QGIndex) -> dict:
    """Measured byte counts per category plus the out-degree histogram.

    raw/neighbors/codes match n*4D, n*4R, n*R*D'/8 exactly (the classic
    graph-plus-codes accounting); the factor pairs are extra and reported
    on their own, as is the id-width share, 12R bytes per vertex combined.
    """
    n, d, r, dp = index.n, index.dim, index.degree, index.padded_dim
    bytes_raw = n * 4 * d
    bytes_neighbors = n * 4 * r
    bytes_codes = n * r * dp // 8
    bytes_factors = n * 8 * r
    degs, counts = np.unique(index.degrees(), return_counts=True)
    return {
        "n": n,
        "bytes_raw": bytes_raw,
        "bytes_neighbors": bytes_neighbors,
        "bytes_codes": bytes_codes,
        "bytes_factors": bytes_factors,
        "bytes_total": bytes_raw + bytes_neighbors + bytes_codes + bytes_factors,
        "bytes_per_vertex_ids_and_factors": 12 * r,
        "degree_histogram": {int(k): int(v) for k, v in zip(degs, counts)},
        "block_stride": index.block_stride,
        "header_bytes": HEADER_SIZE,
    }
