"""Build an index on synthetic data, sweep the beam size, and look at the
recall/throughput trade-off plus the effect of duplicate beam entries.

Run:  python demos/03_build_search_sweep.py
Writes: demos/sweep.svg
"""

import pathlib
import time

import numpy as np

import symqg

rng = np.random.default_rng(3)
n, dim = 20_000, 48
data = rng.standard_normal((n, dim)).astype(np.float32)
queries = rng.standard_normal((200, dim)).astype(np.float32)

print(f"dataset: {n} x {dim} float32")

t0 = time.perf_counter()
gt_ids, gt_dists = symqg.groundtruth(data, queries, 10)
print(f"ground truth (full scan): {time.perf_counter() - t0:.1f}s")

t0 = time.perf_counter()
index = symqg.build(data, symqg.BuildParams(degree=32, ef=200, iters=3, seed=9))
print(f"index build (R=32, EF=200, 3 iterations): {time.perf_counter() - t0:.1f}s")
info = index.stats()
print(f"index size: {info['bytes_total'] / 1e6:.1f} MB "
      f"(raw {info['bytes_raw'] / 1e6:.1f}, codes {info['bytes_codes'] / 1e6:.1f})")

print()
print("beam-size sweep (single thread):")
report = symqg.bench(index, queries, gt_ids, gt_dists, 10,
                     beam_list=[20, 40, 80, 160, 320])
print(f"{'n_b':>6} {'QPS':>10} {'recall@10':>10} {'ADR':>10} {'visited':>9}")
for row in report.rows:
    print(f"{row.n_b:>6} {row.qps:>10.0f} {row.recall:>10.3f} "
          f"{row.adr:>10.5f} {row.visited_mean:>9.1f}")

out = pathlib.Path(__file__).parent / "sweep.svg"
symqg.metrics.plot_report(report, out)
print(f"curve written to {out}")

# ---------------------------------------------------------------------------
# Duplicate beam entries: the same vertex may sit in the beam once per
# estimating context, so one under-estimate suffices to get it visited.
# ---------------------------------------------------------------------------
print()
print("multiple estimated distances, on vs. off (n_b = 60):")
for multiple, label in ((True, "duplicates allowed"), (False, "first only")):
    hits = 0
    for qi in range(queries.shape[0]):
        res = symqg.search(index, queries[qi], 60, 10,
                           multiple_estimates=multiple)
        hits += len(set(res.ids.tolist()) & set(gt_ids[qi].tolist()))
    print(f"  {label:>20}: recall@10 = {hits / (queries.shape[0] * 10):.3f}")
