"""symqg: in-memory approximate nearest-neighbor search that drives a
fixed-out-degree proximity graph with batched 1-bit distance estimates.

Typical use:

    import numpy as np
    import symqg

    data = np.random.rand(10000, 64).astype(np.float32)
    index = symqg.build(data, symqg.BuildParams(degree=32, ef=200, seed=1))
    result = symqg.search(index, data[0], n_b=100, k=10)
    index.save("vectors.qg")
"""

from .builder import BuildParams, build, random_init, nsg_prune, refine_degree
from .datasets import DatasetFile, read_vecs, write_vecs
from .errors import FormatError
from .fastscan import (PackedBatch, QueryLut, batch_estimate, build_query_lut,
                       pack_codes, unpack_codes)
from .metrics import (SweepReport, avg_distance_ratio, bench, groundtruth,
                      recall)
from .qindex import INVALID_ID, QGIndex, assemble, load, save, stats
from .quantizer import (NeighborCode, estimate_sqdist, fused_estimate,
                        quantize_residual, reference_inner_estimate)
from .rotation import Rotator, apply_inverse_rotation, create_rotator
from .search import BeamPool, SearchResult, prefetch_next, search

__version__ = "0.1.0"

__all__ = [
    "BuildParams", "build", "random_init", "nsg_prune", "refine_degree",
    "DatasetFile", "read_vecs", "write_vecs",
    "FormatError",
    "PackedBatch", "QueryLut", "batch_estimate", "build_query_lut",
    "pack_codes", "unpack_codes",
    "SweepReport", "avg_distance_ratio", "bench", "groundtruth", "recall",
    "INVALID_ID", "QGIndex", "assemble", "load", "save", "stats",
    "NeighborCode", "estimate_sqdist", "fused_estimate", "quantize_residual",
    "reference_inner_estimate",
    "Rotator", "apply_inverse_rotation", "create_rotator",
    "BeamPool", "SearchResult", "prefetch_next", "search",
]
