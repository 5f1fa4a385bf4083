"""Ground truth vs. a quadratic-loop oracle, metric definitions, and the
benchmark sweep machinery."""

import numpy as np
import pytest

import symqg
from symqg import avg_distance_ratio, bench, groundtruth, recall
from symqg.metrics import SweepReport


def quadratic_gt(data, queries, k):
    """Independently coded double loop (no vectorization, no shared code)."""
    nq = queries.shape[0]
    ids = np.empty((nq, k), dtype=np.int64)
    dists = np.empty((nq, k), dtype=np.float64)
    for qi in range(nq):
        pairs = []
        for i in range(data.shape[0]):
            acc = 0.0
            for t in range(data.shape[1]):
                diff = float(data[i, t]) - float(queries[qi, t])
                acc += diff * diff
            pairs.append((acc, i))
        pairs.sort()
        ids[qi] = [p[1] for p in pairs[:k]]
        dists[qi] = [np.sqrt(p[0]) for p in pairs[:k]]
    return ids, dists


class TestGroundtruth:
    def test_stored_vector_first(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((50, 8)).astype(np.float32)
        ids, dists = groundtruth(data, data[[7]], 3)
        assert ids[0, 0] == 7
        assert dists[0, 0] == pytest.approx(0.0, abs=1e-5)

    def test_k_equals_n_fully_sorted(self):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((20, 4)).astype(np.float32)
        q = rng.standard_normal((1, 4)).astype(np.float32)
        ids, dists = groundtruth(data, q, 20)
        assert sorted(ids[0].tolist()) == list(range(20))
        assert np.all(np.diff(dists[0]) >= 0)

    def test_matches_quadratic_oracle(self):
        rng = np.random.default_rng(2)
        data = rng.standard_normal((1000, 16)).astype(np.float32)
        queries = rng.standard_normal((20, 16)).astype(np.float32)
        ids, dists = groundtruth(data, queries, 10)
        oids, odists = quadratic_gt(data, queries, 10)
        assert np.array_equal(ids, oids)
        np.testing.assert_allclose(dists, odists, rtol=1e-9, atol=1e-9)

    def test_ties_broken_by_lower_id(self):
        data = np.zeros((5, 3), dtype=np.float32)  # all identical
        ids, _ = groundtruth(data, np.ones((1, 3), dtype=np.float32), 5)
        assert ids[0].tolist() == [0, 1, 2, 3, 4]

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            groundtruth(np.zeros((3, 2), np.float32),
                        np.zeros((1, 2), np.float32), 4)


class TestRecall:
    def test_identical(self):
        assert recall([1, 2, 3], [3, 2, 1], 3) == 1.0

    def test_disjoint(self):
        assert recall([1, 2], [3, 4], 2) == 0.0

    def test_partial_overlap(self):
        assert recall(list(range(10)), list(range(1, 11)), 10) == 0.9

    def test_short_result_counts_misses(self):
        assert recall([1], [1, 2], 2) == 0.5


class TestAvgDistanceRatio:
    def test_equal_lists(self):
        assert avg_distance_ratio([1.0, 2.0], [1.0, 2.0]) == 1.0

    def test_doubled(self):
        assert avg_distance_ratio([2.0, 4.0], [1.0, 2.0]) == 2.0

    def test_zero_ground_truth_pairs(self):
        assert avg_distance_ratio([0.0, 3.0], [0.0, 3.0]) == 1.0
        with pytest.warns(UserWarning, match="epsilon"):
            big = avg_distance_ratio([1e-6, 3.0], [0.0, 3.0])
        assert big > 1e5

    def test_matches_transcribed_loop(self):
        rng = np.random.default_rng(3)
        gt = np.sort(rng.uniform(0.5, 2.0, 10))
        res = gt * rng.uniform(1.0, 1.5, 10)
        expected = sum(float(res[i]) / float(gt[i]) for i in range(10)) / 10
        assert avg_distance_ratio(res, gt) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            avg_distance_ratio([1.0], [1.0, 2.0])


class TestBench:
    def test_repeated_beam_rows_identical(self, index1k, gauss1k):
        _, queries = gauss1k
        gt_ids, gt_dists = groundtruth(index1k.raw, queries[:20], 10)
        report = bench(index1k, queries[:20], gt_ids, gt_dists, 10, [64, 64])
        assert len(report.rows) == 2
        assert report.rows[0].recall == report.rows[1].recall
        assert report.rows[0].adr == report.rows[1].adr
        assert report.rows[0].visited_mean == report.rows[1].visited_mean

    def test_full_beam_reaches_full_recall(self, index1k, gauss1k):
        _, queries = gauss1k
        gt_ids, gt_dists = groundtruth(index1k.raw, queries[:20], 10)
        report = bench(index1k, queries[:20], gt_ids, gt_dists, 10, [1000])
        assert report.rows[0].recall == 1.0
        assert report.rows[0].adr == pytest.approx(1.0, abs=1e-9)

    def test_rows_sorted_and_adr_sane(self, index1k, gauss1k):
        _, queries = gauss1k
        gt_ids, gt_dists = groundtruth(index1k.raw, queries[:20], 10)
        report = bench(index1k, queries[:20], gt_ids, gt_dists, 10, [128, 16, 64])
        assert [r.n_b for r in report.rows] == [16, 64, 128]
        for row in report.rows:
            assert row.adr >= 1.0 - 1e-9
            assert 0.0 <= row.recall <= 1.0
            assert row.qps > 0

    def test_csv_roundtrip(self, index1k, gauss1k, tmp_path):
        _, queries = gauss1k
        gt_ids, gt_dists = groundtruth(index1k.raw, queries[:10], 10)
        report = bench(index1k, queries[:10], gt_ids, gt_dists, 10, [32, 64])
        path = tmp_path / "r.csv"
        report.to_csv(path)
        again = SweepReport.from_csv(path)
        assert [r.__dict__ for r in again.rows] == [r.__dict__ for r in report.rows]
        header = path.read_text().splitlines()[0]
        assert header == "n_b,qps,recall,adr,visited_mean"

    def test_empty_beam_list_rejected(self, index1k, gauss1k):
        _, queries = gauss1k
        with pytest.raises(ValueError):
            bench(index1k, queries[:2], np.zeros((2, 10), np.int64),
                  np.zeros((2, 10)), 10, [])

    def test_chart_written(self, index1k, gauss1k, tmp_path):
        _, queries = gauss1k
        gt_ids, gt_dists = groundtruth(index1k.raw, queries[:5], 10)
        report = bench(index1k, queries[:5], gt_ids, gt_dists, 10, [32])
        out = tmp_path / "chart.svg"
        symqg.metrics.plot_report(report, out)
        assert out.stat().st_size > 0
        assert b"<svg" in out.read_bytes()[:500]

    def test_recall_trend_on_10k(self, index10k, gauss10k, gt10k):
        index, _ = index10k
        _, queries = gauss10k
        gt_ids, gt_dists = gt10k
        report = bench(index, queries, gt_ids, gt_dists, 10,
                       [20, 40, 80, 160, 320])
        recalls = [r.recall for r in report.rows]
        for a, b in zip(recalls, recalls[1:]):
            assert b >= a - 0.005
        vis = [r.visited_mean for r in report.rows]
        assert all(x <= y for x, y in zip(vis, vis[1:]))
