"""Seeded orthogonal random rotation via the fast Walsh-Hadamard transform.

Vectors are zero-padded to a power-of-two dimension and pushed through
``rounds`` repetitions of (random coordinate sign flip, normalized Hadamard
transform).  Each round is an orthogonal map, so the composition is too:
norms are preserved and inner products in the rotated space equal inner
products in the original space.  Runs in O(D' log D') per vector instead of
the O(D'^2) of a dense rotation matrix.

Sign tables are derived from the seed with a counter-based splitmix64
generator, so a (seed, dim, rounds) triple always regenerates the identical
rotation -- which is all an index file needs to persist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ROUNDS = 3
# Codes must fill whole 64-bit words and LUT segment counts must stay a
# multiple of 16, hence the floor on the padded dimension.
MIN_PADDED_DIM = 64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Counter-based splitmix64 finalizer, vectorized over uint64 arrays."""
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _sign_table(seed: int, rounds: int, padded_dim: int) -> np.ndarray:
    """Deterministic (rounds, padded_dim) table of +-1.0 float32 values."""
    base = _splitmix64(np.full(1, seed, dtype=np.uint64))[0]
    signs = np.empty((rounds, padded_dim), dtype=np.float32)
    for r in range(rounds):
        ctr = (np.uint64(r) << np.uint64(32)) + np.arange(padded_dim, dtype=np.uint64)
        with np.errstate(over="ignore"):
            mixed = _splitmix64(base + ctr)
        signs[r] = np.where((mixed >> np.uint64(63)) == np.uint64(0), 1.0, -1.0)
    return signs


def _fwht_f32(x: np.ndarray, dim: int) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along the last axis.

    ``dim`` must be a power of two.  Operates row-wise on a copy.
    """
    lead = x.shape[:-1]
    x = np.ascontiguousarray(x, dtype=np.float32).reshape(-1, dim).copy()
    h = 1
    while h < dim:
        y = x.reshape(-1, dim // (2 * h), 2, h)
        a = y[:, :, 0, :].copy()
        b = y[:, :, 1, :].copy()
        y[:, :, 0, :] = a + b
        y[:, :, 1, :] = a - b
        h *= 2
    return x.reshape(lead + (dim,))


@dataclass(frozen=True, eq=False)
class Rotator:
    """Immutable seeded rotation; safe to share across query threads.

    The linear map it induces is orthogonal.  Only (seed, dim, rounds) is
    persisted; ``signs`` is regenerated deterministically.
    """

    seed: int
    dim: int
    padded_dim: int
    rounds: int
    signs: np.ndarray  # (rounds, padded_dim) of +-1.0, float32

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Rotate one vector of length ``dim`` into ``padded_dim`` space."""
        return apply_inverse_rotation(self, v)

    def apply_batch(self, vs: np.ndarray) -> np.ndarray:
        """Rotate a (..., dim) stack of vectors at once."""
        vs = np.asarray(vs, dtype=np.float32)
        if vs.shape[-1] != self.dim:
            raise ValueError(
                f"expected vectors of dim {self.dim}, got {vs.shape[-1]}"
            )
        return self._apply_padded(vs)

    def _apply_padded(self, vs: np.ndarray) -> np.ndarray:
        out = np.zeros(vs.shape[:-1] + (self.padded_dim,), dtype=np.float32)
        out[..., : vs.shape[-1]] = vs
        norm = np.float32(1.0 / np.sqrt(self.padded_dim))
        for r in range(self.rounds):
            out *= self.signs[r]
            out = _fwht_f32(out, self.padded_dim) * norm
        return out


def padded_dimension(dim: int) -> int:
    """Smallest power of two >= dim, floored at MIN_PADDED_DIM."""
    return max(MIN_PADDED_DIM, 1 << (int(dim) - 1).bit_length())


def create_rotator(seed: int, dim: int, rounds: int = DEFAULT_ROUNDS) -> Rotator:
    """Build the rotation for vectors of dimension ``dim``.

    ``rounds=0`` yields the identity-with-zero-padding map (useful in tests).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    padded = padded_dimension(dim)
    signs = _sign_table(int(seed) & 0xFFFFFFFFFFFFFFFF, rounds, padded)
    signs.setflags(write=False)
    return Rotator(seed=int(seed), dim=int(dim), padded_dim=padded,
                   rounds=rounds, signs=signs)


def apply_inverse_rotation(rotator: Rotator, v: np.ndarray) -> np.ndarray:
    """Map a raw vector of length ``dim`` into the code space (length D').

    Zero-pads to ``padded_dim`` first; padding coordinates contribute nothing
    to norms or inner products.
    """
    v = np.asarray(v, dtype=np.float32)
    if v.ndim != 1 or v.shape[0] != rotator.dim:
        raise ValueError(
            f"expected a vector of length {rotator.dim}, got shape {v.shape}"
        )
    return rotator._apply_padded(v)
