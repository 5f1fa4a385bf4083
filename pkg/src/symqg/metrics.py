"""Ground truth, accuracy metrics, and the benchmark sweep.

Search quality is measured by recall (overlap with the exact top-K) and the
average distance ratio (position-wise ratio of returned to true distances,
>= 1 up to float noise).  Throughput is queries per second over a timed
single-thread loop; the timing window covers searching only, never ground
truth or file I/O.
"""

from __future__ import annotations

import csv
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .builder import configured_threads
from .qindex import QGIndex
from .search import search

ADR_EPSILON = 1e-12


@dataclass(eq=False)
class SweepRow:
    n_b: int
    qps: float
    recall: float
    adr: float
    visited_mean: float


@dataclass(eq=False)
class SweepReport:
    rows: list[SweepRow]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["n_b", "qps", "recall", "adr", "visited_mean"])
            for r in self.rows:
                writer.writerow([r.n_b, repr(r.qps), repr(r.recall),
                                 repr(r.adr), repr(r.visited_mean)])

    @classmethod
    def from_csv(cls, path) -> "SweepReport":
        rows = []
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            for rec in reader:
                rows.append(SweepRow(
                    n_b=int(rec["n_b"]), qps=float(rec["qps"]),
                    recall=float(rec["recall"]), adr=float(rec["adr"]),
                    visited_mean=float(rec["visited_mean"])))
        return cls(rows=rows)


def groundtruth(
    data: np.ndarray, queries: np.ndarray, k: int, metric: str = "euclidean"
) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-k by full scan; ties broken by lower id.

    Returns (ids (nq, k) int64, distances (nq, k) float64).  Queries are
    scanned in parallel worker threads; cosine works on normalized copies.
    """
    data = np.ascontiguousarray(data, dtype=np.float32)
    queries = np.ascontiguousarray(queries, dtype=np.float32)
    n = data.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    if metric == "cosine":
        def unit(x):
            norms = np.linalg.norm(x, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            return (x / norms).astype(np.float32)
        data, queries = unit(data), unit(queries)
    elif metric != "euclidean":
        raise ValueError("metric must be 'euclidean' or 'cosine'")

    data64 = data.astype(np.float64)
    sq_norms = (data64 ** 2).sum(axis=1)
    nq = queries.shape[0]
    ids = np.empty((nq, k), dtype=np.int64)
    dists = np.empty((nq, k), dtype=np.float64)

    def scan(qi: int) -> None:
        q = queries[qi].astype(np.float64)
        d2 = sq_norms - 2.0 * (data64 @ q) + q @ q
        np.maximum(d2, 0.0, out=d2)
        order = np.lexsort((np.arange(n), d2))[:k]
        ids[qi] = order
        dists[qi] = np.sqrt(d2[order])

    with ThreadPoolExecutor(max_workers=configured_threads()) as pool:
        list(pool.map(scan, range(nq)))
    return ids, dists


def recall(result_ids, gt_ids, k: int) -> float:
    """|result intersect true top-k| / k; short results count as misses."""
    res = set(int(x) for x in list(result_ids)[:k])
    gt = set(int(x) for x in list(gt_ids)[:k])
    return len(res & gt) / k


def avg_distance_ratio(result_dists, gt_dists) -> float:
    """Mean position-wise ratio of returned to true distances.

    Zero true distances pair as ratio 1 against zero results; otherwise the
    ratio is taken against a tiny epsilon and the row is flagged.
    """
    result_dists = np.asarray(result_dists, dtype=np.float64)
    gt_dists = np.asarray(gt_dists, dtype=np.float64)
    if result_dists.shape != gt_dists.shape:
        raise ValueError("result and ground-truth lists differ in length")
    ratios = np.empty_like(gt_dists)
    zero = gt_dists == 0.0
    ratios[~zero] = result_dists[~zero] / gt_dists[~zero]
    if zero.any():
        both = zero & (result_dists == 0.0)
        ratios[both] = 1.0
        flagged = zero & ~both
        if flagged.any():
            warnings.warn(
                f"{int(flagged.sum())} zero ground-truth distances with "
                "nonzero results; ratio taken against epsilon", stacklevel=2)
            ratios[flagged] = result_dists[flagged] / ADR_EPSILON
    return float(ratios.mean())


def bench(
    index: QGIndex,
    queries: np.ndarray,
    gt_ids: np.ndarray,
    gt_dists: np.ndarray,
    k: int,
    beam_list,
    use_quantized: bool | None = None,
) -> SweepReport:
    """Timed single-thread sweep over beam sizes.

    Each beam size gets a warm-up pass, then one timed loop over all
    queries; recall and the distance ratio are averaged per query.
    """
    if len(beam_list) == 0:
        raise ValueError("beam_list must not be empty")
    queries = np.ascontiguousarray(queries, dtype=np.float32)
    nq = queries.shape[0]
    rows = []
    for n_b in sorted(int(b) for b in beam_list):
        for qi in range(min(nq, 10)):  # warm-up: caches, JIT, page-ins
            search(index, queries[qi], n_b, k, use_quantized=use_quantized)
        results = []
        t0 = time.perf_counter()
        for qi in range(nq):
            results.append(search(index, queries[qi], n_b, k,
                                  use_quantized=use_quantized))
        elapsed = time.perf_counter() - t0
        recs = np.empty(nq)
        adrs = np.empty(nq)
        vis = np.empty(nq)
        for qi, res in enumerate(results):
            recs[qi] = recall(res.ids, gt_ids[qi], k)
            m = res.distances.shape[0]  # < k only when the beam ran dry
            adrs[qi] = (avg_distance_ratio(res.distances, gt_dists[qi, :m])
                        if m else np.inf)
            vis[qi] = res.visited_count
        rows.append(SweepRow(
            n_b=n_b, qps=nq / elapsed, recall=float(recs.mean()),
            adr=float(adrs.mean()), visited_mean=float(vis.mean())))
    return SweepReport(rows=rows)


def plot_report(report: SweepReport, path) -> None:
    """Recall-vs-QPS line chart as a vector-graphics file (plumbing)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r.recall for r in report.rows], [r.qps for r in report.rows],
            marker="o")
    for r in report.rows:
        ax.annotate(str(r.n_b), (r.recall, r.qps), fontsize=8,
                    textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("recall")
    ax.set_ylabel("QPS")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
