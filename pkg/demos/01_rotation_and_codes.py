"""A walk through the two primitives everything else is built on: the
seeded orthogonal rotation and the 1-bit residual codes.

Run:  python demos/01_rotation_and_codes.py
"""

import numpy as np

import symqg

rng = np.random.default_rng(0)

# ---------------------------------------------------------------------------
# 1. The rotation: orthogonal, deterministic, O(D' log D')
# ---------------------------------------------------------------------------
print("=" * 70)
print("Seeded random rotation")
print("=" * 70)

rot = symqg.create_rotator(seed=7, dim=100)
print(f"dim=100 pads to D' = {rot.padded_dim} (power of two, >= 64)")

v = rng.standard_normal(100).astype(np.float32) * 3.0
out = symqg.apply_inverse_rotation(rot, v)
print(f"||v|| = {np.linalg.norm(v):.6f}   ||rotated|| = {np.linalg.norm(out):.6f}"
      "   (norms preserved)")

again = symqg.create_rotator(seed=7, dim=100)
print("same seed, same map:",
      np.array_equal(out, symqg.apply_inverse_rotation(again, v)))

# ---------------------------------------------------------------------------
# 2. Codes: one sign bit per rotated dimension, plus two fused factors
# ---------------------------------------------------------------------------
print()
print("=" * 70)
print("1-bit neighbor codes")
print("=" * 70)

center = rng.standard_normal(100).astype(np.float32)
neighbor = rng.standard_normal(100).astype(np.float32)
code = symqg.quantize_residual(rot, neighbor, center)
print(f"code: {rot.padded_dim} bits ({rot.padded_dim // 8} bytes), "
      f"bias={code.bias:.4f}, scale={code.scale:.4f}")
print(f"bits set: {int(code.bits.sum())}/{rot.padded_dim}")

# The two factors turn the distance estimate into one multiply-add:
#   est ||neighbor - q||^2  =  bias + ||q - center||^2 - scale * lut_sum
query = rng.standard_normal(100).astype(np.float32)
lut = symqg.build_query_lut(symqg.apply_inverse_rotation(rot, query))
batch = symqg.pack_codes(code.bits[None, :])
lut_sum = float(symqg.batch_estimate(batch, lut)[0])
d_qc_sq = float(((query - center) ** 2).sum())
est = symqg.estimate_sqdist(code, d_qc_sq, lut_sum)
true = float(((query - neighbor) ** 2).sum())
print(f"estimated squared distance {est:10.4f}")
print(f"true squared distance      {true:10.4f}   "
      f"(rel err {abs(est - true) / true:.3f})")

# ---------------------------------------------------------------------------
# 3. The estimator is unbiased across rotations
# ---------------------------------------------------------------------------
print()
print("=" * 70)
print("Unbiasedness: average the inner-product estimate over 500 seeds")
print("=" * 70)

dp = 64
o = rng.standard_normal(dp).astype(np.float32)
o /= np.float32(np.linalg.norm(o))
q = rng.standard_normal(dp).astype(np.float32)
q /= np.float32(np.linalg.norm(q))
zero = np.zeros(dp, dtype=np.float32)

estimates = []
for seed in range(500):
    r = symqg.create_rotator(seed, dp)
    c = symqg.quantize_residual(r, o, zero)
    estimates.append(symqg.reference_inner_estimate(c, r, q, zero))
estimates = np.array(estimates)
print(f"true <o, q>     = {float(o @ q):+.5f}")
print(f"mean estimate   = {estimates.mean():+.5f}")
print(f"std of estimate = {estimates.std():.5f}   "
      f"(single-estimate noise, shrinks like 1/sqrt(D'))")
