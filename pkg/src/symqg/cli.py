"""Command-line surface: build, gt, query, bench, stats.

Exit codes: 0 on success, 2 on a malformed input file, 1 on any other error.
Ground truth is stored as a pair of files sharing a prefix: <out>.ivecs for
ids and <out>.fvecs for distances.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .builder import BuildParams, build
from .datasets import read_vecs, write_vecs
from .errors import FormatError
from .metrics import SweepReport, bench, groundtruth, plot_report
from .qindex import load
from .search import search

_METRIC = {"l2": "euclidean", "cosine": "cosine"}


def _add_metric(p):
    p.add_argument("--metric", choices=sorted(_METRIC), default="l2")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symqg",
        description="Quantized-graph approximate nearest-neighbor search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct an index from an fvecs file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="index file to write")
    _add_metric(p)
    p.add_argument("--R", type=int, default=32, help="out-degree (multiple of 32)")
    p.add_argument("--EF", type=int, default=200, help="construction beam size")
    p.add_argument("--iters", type=int, default=3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--lut", choices=["exact", "quantized"], default="exact")
    p.add_argument("--no-refine", action="store_true",
                   help="skip degree alignment (ablation)")

    p = sub.add_parser("gt", help="exact ground truth by full scan")
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--K", type=int, default=10)
    _add_metric(p)
    p.add_argument("--out", required=True,
                   help="prefix; writes <out>.ivecs and <out>.fvecs")

    p = sub.add_parser("query", help="run queries against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--beams", default="100", help="beam size (single value)")
    p.add_argument("--lut", choices=["exact", "quantized"], default=None)
    p.add_argument("--out", required=True,
                   help="prefix; writes <out>.ivecs and <out>.fvecs")

    p = sub.add_parser("bench", help="timed recall/QPS sweep over beam sizes")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--gt", required=True, help="ground-truth file prefix")
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--beams", default="50,100,200,400",
                   help="comma-separated beam sizes")
    p.add_argument("--lut", choices=["exact", "quantized"], default=None)
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--chart", default=None, help="optional SVG chart path")

    p = sub.add_parser("stats", help="print index size accounting")
    p.add_argument("--index", required=True)
    return parser


def _cmd_build(args) -> int:
    data = read_vecs(args.data)
    params = BuildParams(degree=args.R, ef=args.EF, iters=args.iters,
                         seed=args.seed, metric=_METRIC[args.metric],
                         refine=not args.no_refine)
    t0 = time.perf_counter()
    index = build(data.payload, params, lut_mode=args.lut)
    index.save(args.out)
    print(f"built index: n={index.n} dim={index.dim} R={index.degree} "
          f"in {time.perf_counter() - t0:.1f}s -> {args.out}")
    return 0


def _cmd_gt(args) -> int:
    data = read_vecs(args.data)
    queries = read_vecs(args.queries)
    ids, dists = groundtruth(data.payload, queries.payload, args.K,
                             metric=_METRIC[args.metric])
    write_vecs(f"{args.out}.ivecs", ids, kind="int")
    write_vecs(f"{args.out}.fvecs", dists, kind="float")
    print(f"ground truth for {queries.count} queries -> {args.out}.{{ivecs,fvecs}}")
    return 0


def _lut_flag(args):
    return None if args.lut is None else (args.lut == "quantized")


def _cmd_query(args) -> int:
    index = load(args.index)
    queries = read_vecs(args.queries)
    n_b = int(args.beams.split(",")[0])
    ids = np.full((queries.count, args.K), -1, dtype=np.int64)
    dists = np.full((queries.count, args.K), np.inf, dtype=np.float64)
    for qi in range(queries.count):
        res = search(index, queries.payload[qi], n_b, args.K,
                     use_quantized=_lut_flag(args))
        m = res.ids.shape[0]
        ids[qi, :m] = res.ids
        dists[qi, :m] = res.distances
    write_vecs(f"{args.out}.ivecs", ids, kind="int")
    write_vecs(f"{args.out}.fvecs", dists, kind="float")
    print(f"{queries.count} queries at n_b={n_b} -> {args.out}.{{ivecs,fvecs}}")
    return 0


def _cmd_bench(args) -> int:
    index = load(args.index)
    queries = read_vecs(args.queries)
    gt_ids = read_vecs(f"{args.gt}.ivecs", kind="int")
    gt_dists = read_vecs(f"{args.gt}.fvecs", kind="float")
    beams = [int(b) for b in args.beams.split(",") if b.strip()]
    report = bench(index, queries.payload, gt_ids.payload, gt_dists.payload,
                   args.K, beams, use_quantized=_lut_flag(args))
    report.to_csv(args.out)
    if args.chart:
        plot_report(report, args.chart)
    for row in report.rows:
        print(f"n_b={row.n_b:<6} qps={row.qps:<10.1f} recall={row.recall:.4f} "
              f"adr={row.adr:.6f} visited={row.visited_mean:.1f}")
    print(f"report -> {args.out}")
    return 0


def _cmd_stats(args) -> int:
    index = load(args.index)
    info = index.stats()
    hist = info.pop("degree_histogram")
    for key, value in info.items():
        print(f"{key}: {value}")
    print("degree_histogram: "
          + ", ".join(f"{d}:{c}" for d, c in sorted(hist.items())))
    return 0


_COMMANDS = {
    "build": _cmd_build,
    "gt": _cmd_gt,
    "query": _cmd_query,
    "bench": _cmd_bench,
    "stats": _cmd_stats,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
