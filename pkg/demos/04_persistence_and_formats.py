"""The on-disk artifacts: vector files, the index file, and the size
accounting, with their command-line equivalents.

Run:  python demos/04_persistence_and_formats.py
"""

import pathlib
import tempfile

import numpy as np

import symqg

rng = np.random.default_rng(4)
workdir = pathlib.Path(tempfile.mkdtemp(prefix="qg-demo-"))
print(f"working in {workdir}\n")

# ---------------------------------------------------------------------------
# 1. Vector files: 32-bit count then payload, one record per vector
# ---------------------------------------------------------------------------
data = rng.standard_normal((500, 24)).astype(np.float32)
symqg.write_vecs(workdir / "data.fvecs", data)
ds = symqg.read_vecs(workdir / "data.fvecs")
print(f"data.fvecs: {ds.count} records of dim {ds.dim}, "
      f"{(workdir / 'data.fvecs').stat().st_size} bytes "
      f"= count * (4 + 4 * dim)")

# ---------------------------------------------------------------------------
# 2. The index file: header + one constant-stride block per vertex
# ---------------------------------------------------------------------------
index = symqg.build(ds.payload, symqg.BuildParams(degree=32, ef=64, iters=2,
                                                  seed=12))
index.save(workdir / "index.qg")
size = (workdir / "index.qg").stat().st_size
print(f"\nindex.qg: {size} bytes = 48-byte header + "
      f"{index.n} x {index.block_stride}-byte blocks")
print("block = raw vector | neighbor ids | packed codes | bias | scale")

again = symqg.load(workdir / "index.qg")
q = rng.standard_normal(24).astype(np.float32)
a = symqg.search(index, q, 64, 5)
b = symqg.search(again, q, 64, 5)
print("loaded index searches identically:",
      np.array_equal(a.ids, b.ids) and np.array_equal(a.distances, b.distances))

# ---------------------------------------------------------------------------
# 3. Size accounting
# ---------------------------------------------------------------------------
print("\nstats():")
info = index.stats()
for key in ("bytes_raw", "bytes_neighbors", "bytes_codes", "bytes_factors",
            "bytes_total", "block_stride"):
    print(f"  {key:<24} {info[key]}")
print(f"  {'degree_histogram':<24} {info['degree_histogram']}")

print(f"""
the same flows from a shell:
  symqg build --data data.fvecs --out index.qg --R 32 --EF 64 --iters 2
  symqg gt    --data data.fvecs --queries q.fvecs --K 10 --out gt
  symqg bench --index index.qg --queries q.fvecs --gt gt --K 10 \\
              --beams 20,40,80 --out report.csv --chart report.svg
  symqg stats --index index.qg
""")
