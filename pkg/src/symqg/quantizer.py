"""1-bit-per-dimension codes of neighbor residuals, plus fused factors.

A neighbor o_r is coded relative to a center c (the owning vertex's vector):
the code is the sign pattern of the rotated unit residual, i.e. the nearest
member of the codebook of rotated bi-valued vectors with entries +-1/sqrt(D').

Alongside the bits we precompute two scalars:

    scale = 2 * ||o_r - c|| / <xbar, rot(o)>          (units of distance)
    bias  = ||o_r - c||^2 + scale * <xbar, rot(c)>    (units of distance^2)

where xbar is the bi-valued vector matching the bits and o the unit residual.
With these, the squared-distance estimate for a query q_r collapses to one
fused multiply-add:

    est ||o_r - q_r||^2 = bias + ||q_r - c||^2 - scale * <xbar, rot(q_r)>

The last inner product is exactly what the batched LUT machinery produces,
and it does not depend on c, so one query-time table serves every vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rotation import Rotator, apply_inverse_rotation


@dataclass(frozen=True, eq=False)
class NeighborCode:
    """Sign bits plus the two precomputed estimate factors.

    ``scale >= 0`` always; ``scale == 0`` exactly when the residual is zero,
    in which case the bits are all zero and ``bias == 0`` too.
    """

    bits: np.ndarray  # (padded_dim,) uint8 in {0, 1}
    bias: float
    scale: float


def quantize_batch(
    rotator: Rotator,
    residuals: np.ndarray,
    rotated_center: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quantize a stack of residuals against already-rotated center(s).

    residuals: (m, dim) float32, rows are o_r - c.
    rotated_center: (padded_dim,) float32 shared by all rows, or (m, padded_dim)
    with one center per row.
    Returns (bits (m, padded_dim) uint8, bias (m,) float32, scale (m,) float32).

    All arithmetic is row-independent, so this is the single quantization
    path: the scalar ``quantize_residual`` and bulk index assembly both route
    through it and reproduce each other's stored factors bit-for-bit.
    """
    residuals = np.asarray(residuals, dtype=np.float32)
    m = residuals.shape[0]
    dp = rotator.padded_dim
    inv_sqrt = 1.0 / np.sqrt(dp)

    norms_sq = np.sum(residuals.astype(np.float64) ** 2, axis=1)
    norms = np.sqrt(norms_sq)
    nz = norms > 0.0

    rotated = np.zeros((m, dp), dtype=np.float32)
    if np.any(nz):
        unit = residuals[nz] / norms[nz, None].astype(np.float32)
        rotated[nz] = rotator.apply_batch(unit)

    bits = (rotated > 0.0).astype(np.uint8)
    bits[~nz] = 0

    # <xbar, rot(o)>: the sign-matched bi-valued dot is just the L1 norm
    # of the rotated unit residual, scaled.  Zero coordinates map to bit 0
    # and contribute nothing either way.
    dot_oo = np.sum(np.abs(rotated, dtype=np.float64), axis=1) * inv_sqrt

    sg = bits.astype(np.float32) * np.float32(2.0) - np.float32(1.0)
    rc = np.asarray(rotated_center, dtype=np.float64)
    if rc.ndim == 1:
        rc = rc[None, :]
    xc = np.sum(sg.astype(np.float64) * rc, axis=1) * inv_sqrt

    scale = np.zeros(m, dtype=np.float64)
    bias = np.zeros(m, dtype=np.float64)
    scale[nz] = 2.0 * norms[nz] / dot_oo[nz]
    bias[nz] = norms_sq[nz] + scale[nz] * xc[nz]
    return bits, bias.astype(np.float32), scale.astype(np.float32)


def quantize_residual(
    rotator: Rotator, o_r: np.ndarray, c: np.ndarray
) -> NeighborCode:
    """Code the vector ``o_r`` against the center ``c``."""
    o_r = np.asarray(o_r, dtype=np.float32)
    c = np.asarray(c, dtype=np.float32)
    if o_r.shape != (rotator.dim,) or c.shape != (rotator.dim,):
        raise ValueError(
            f"expected two vectors of length {rotator.dim}, "
            f"got {o_r.shape} and {c.shape}"
        )
    rotated_center = apply_inverse_rotation(rotator, c)
    bits, bias, scale = quantize_batch(rotator, (o_r - c)[None, :], rotated_center)
    return NeighborCode(bits=bits[0], bias=float(bias[0]), scale=float(scale[0]))


def fused_estimate(bias: float, scale: float, d_qc_sq: float, lut_sum: float) -> float:
    """The affine form before the zero clamp, in float32 arithmetic.

    Kept as a bare-scalar helper so the search paths and the public op share
    one rounding behavior: (bias + d_qc_sq) - scale * lut_sum, all float32.
    """
    est = (np.float32(bias) + np.float32(d_qc_sq)
           - np.float32(scale) * np.float32(lut_sum))
    return float(est)


def estimate_sqdist(code: NeighborCode, d_qc_sq: float, lut_sum: float) -> float:
    """Fused squared-distance estimate, clamped at zero.

    ``d_qc_sq`` is the exact squared distance from the query to the center;
    ``lut_sum`` is <xbar, rot(q_r)> as produced by the LUT machinery.
    """
    if d_qc_sq < 0.0:
        raise ValueError("d_qc_sq must be >= 0")
    return max(fused_estimate(code.bias, code.scale, d_qc_sq, lut_sum), 0.0)


def reference_inner_estimate(
    code: NeighborCode, rotator: Rotator, q_r: np.ndarray, c: np.ndarray
) -> float:
    """Scalar estimator of <o, q> between unit residuals, for oracle use.

    Evaluates <xbar, rot(q)> / <xbar, rot(o)> with q the unit residual of the
    query against ``c``.  The denominator is recovered from the stored
    factors: bias - scale * <xbar, rot(c)> gives back ||o_r - c||^2.
    """
    q_r = np.asarray(q_r, dtype=np.float32)
    c = np.asarray(c, dtype=np.float32)
    diff = q_r - c
    qnorm = float(np.sqrt(np.sum(diff.astype(np.float64) ** 2)))
    if qnorm == 0.0:
        raise ValueError("query residual is zero: estimator undefined for q_r == c")
    if code.scale <= 0.0:
        raise ValueError("code has zero residual: estimator undefined")

    dp = rotator.padded_dim
    inv_sqrt = 1.0 / np.sqrt(dp)
    sg = code.bits.astype(np.float64) * 2.0 - 1.0

    rot_c = apply_inverse_rotation(rotator, c).astype(np.float64)
    xc = float(np.sum(sg * rot_c)) * inv_sqrt
    res_norm_sq = float(code.bias) - float(code.scale) * xc
    dot_oo = 2.0 * np.sqrt(max(res_norm_sq, 0.0)) / float(code.scale)

    rot_q = apply_inverse_rotation(rotator, (diff / np.float32(qnorm)))
    xq = float(np.sum(sg * rot_q.astype(np.float64))) * inv_sqrt
    return xq / dot_oo
