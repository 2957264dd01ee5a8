from itertools import permutations

import numpy as np
import pytest

from config import pipeline_rules
from core import evaluation, numerics
from core.evaluation import SequenceResult
from core.exceptions import DimensionError, ParameterError
from core.nls import LocalBasisSet, NlsConfig, nls_segment


def _result(name, error, group="checker", motions=2):
    return SequenceResult(name=name, group=group, num_motions=motions, error_rate=error)


class TestMisclassificationRate:
    def test_examples(self):
        truth = np.array([0, 0, 1, 1, 1])
        assert evaluation.misclassification_rate(truth, truth) == 0.0
        assert evaluation.misclassification_rate(1 - truth, truth) == 0.0
        pred = np.zeros(10, dtype=int)
        pred[5:] = 1
        truth = pred.copy()
        truth[0] = 1
        assert evaluation.misclassification_rate(pred, truth) == pytest.approx(0.1)

    def test_label_values_do_not_matter(self):
        assert evaluation.misclassification_rate([7, 7, 3], [0, 0, 1]) == 0.0

    def test_symmetric(self, rng):
        for _ in range(20):
            a = rng.integers(0, 3, 12)
            b = rng.integers(0, 4, 12)
            assert evaluation.misclassification_rate(a, b) == pytest.approx(
                evaluation.misclassification_rate(b, a))

    def test_matches_exhaustive_relabelling(self, rng):
        for _ in range(50):
            N = int(rng.integers(1, 9))
            K = 3
            pred = rng.integers(0, K, N)
            truth = rng.integers(0, K, N)
            best = max(
                sum(mapping[p] == t for p, t in zip(pred, truth))
                for mapping in permutations(range(K))
            )
            assert evaluation.misclassification_rate(pred, truth) == pytest.approx(1 - best / N)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            evaluation.misclassification_rate([0, 1], [0, 1, 1])

    def test_too_many_labels(self):
        labels = np.arange(11)
        with pytest.raises(ParameterError):
            evaluation.misclassification_rate(labels, labels)


class TestChordalAffinity:
    def test_identical_and_orthogonal(self):
        e = np.eye(4)
        bases = LocalBasisSet(vectors=np.stack([e[:, :2], e[:, :2], e[:, 2:]]))
        affinity = evaluation.chordal_affinity(bases)
        assert affinity[0, 1] == pytest.approx(0.0, abs=1e-12)
        assert affinity[0, 2] == pytest.approx(2.0)

    def test_sum_of_squared_sines(self, rng):
        vectors = np.stack([np.linalg.qr(rng.standard_normal((7, 3)))[0] for _ in range(5)])
        bases = LocalBasisSet(vectors=vectors)
        affinity = evaluation.chordal_affinity(bases)
        for i in range(5):
            for j in range(5):
                angles = numerics.principal_angles(bases[i], bases[j])
                assert affinity[i, j] == pytest.approx(np.sum(np.sin(angles) ** 2), abs=1e-10)

    def test_bounds_point_residuals(self, rng):
        vectors = np.stack([np.linalg.qr(rng.standard_normal((6, 2)))[0] for _ in range(2)])
        bases = LocalBasisSet(vectors=vectors)
        affinity = evaluation.chordal_affinity(bases)[0, 1]
        for _ in range(50):
            x = bases[0].vectors @ rng.standard_normal(2)
            x /= np.linalg.norm(x)
            assert numerics.residual_distance(x, bases[1]) ** 2 <= affinity + 1e-10

    def test_mixed_dimensions(self):
        e = np.eye(3)
        with pytest.raises(DimensionError):
            evaluation.chordal_affinity([numerics.OrthonormalBasis(e[:, :1]),
                                         numerics.OrthonormalBasis(e[:, :2])])


class TestAggregate:
    def test_single_result(self):
        report = evaluation.aggregate([_result("a", 0.01)])
        assert report["overall"]["average"] == "1.00%"
        assert report["overall"]["median"] == "1.00%"
        assert report["overall"]["count"] == 1

    def test_two_results(self):
        report = evaluation.aggregate([_result("a", 0.0), _result("b", 0.02)])
        assert report["overall"]["average"] == "1.00%"
        assert report["overall"]["median"] == "1.00%"

    def test_groups_and_motions(self):
        results = [
            _result("a", 0.0, "checker", 2),
            _result("b", 0.1, "traffic", 2),
            _result("c", 0.2, "checker", 3),
        ]
        report = evaluation.aggregate(results)
        assert set(report["groups"]) == {"checker", "traffic"}
        assert report["groups"]["checker"]["average_value"] == pytest.approx(0.1)
        assert report["motions"]["2"]["all"]["count"] == 2
        assert report["motions"]["3"]["checker"]["median"] == "20.00%"
        assert "traffic" not in report["motions"]["3"]

    def test_empty(self):
        with pytest.raises(ParameterError):
            evaluation.aggregate([])

    def test_report_row(self):
        row = SequenceResult(name="s", num_motions=2, error_rate=0.5, rank=8, data_driven_index=12,
                             threshold_index=13, eta=0.9, seed=0).to_report()
        assert row == {"sequence": "s", "group": "synthetic", "motions": 2, "error": 0.5,
                       "r": 8, "T_d": 12, "threshold_index": 13, "eta": 0.9, "seed": 0}


class TestReferenceComparison:
    def test_overall_within_tolerance(self):
        report = evaluation.aggregate([_result("a", 0.0076)])
        rows = evaluation.compare_with_reference(report)
        overall = [r for r in rows if r["motions"] == "all" and r["group"] == "all"]
        average = next(r for r in overall if r["statistic"] == "average")
        assert average["reference"] == pytest.approx(0.76)
        assert average["within_tolerance"]

    def test_only_covered_rows(self):
        report = evaluation.aggregate([_result("a", 0.5, "traffic", 2)])
        rows = evaluation.compare_with_reference(report)
        assert all(r["motions"] in ("all", 2) for r in rows)
        assert not any(r["group"] == "checker" for r in rows)


class TestSweeps:
    def test_neutral_factor_reproduces_baseline(self, orthogonal_union):
        W, truth = orthogonal_union
        cfg = NlsConfig(rank=8)
        points = evaluation.sweep_threshold(W, cfg, [1.0, 1.05, 1.1, 1.2], truth)
        assert [p.value for p in points] == [1.0, 1.05, 1.1, 1.2]
        assert points[0].error_rate == 0.0
        assert all(0.0 <= p.error_rate <= 1.0 for p in points)
        assert points[1].threshold_index > points[0].threshold_index
        assert all(p.data_driven_index == points[0].threshold_index for p in points)

    def test_step_distances_keep_zero_error_across_factors(self, orthogonal_union):
        W, truth = orthogonal_union
        cfg = NlsConfig(rank=8)
        _, diagnostics = nls_segment(W, cfg)
        t_d = diagnostics.data_driven_index
        factors = pipeline_rules.THRESHOLD_FACTORS

        points = evaluation.sweep_threshold(W, cfg, factors, truth)
        for factor, point in zip(factors, points):
            assert point.error_rate == 0.0, f"factor {factor}"
            assert point.data_driven_index == t_d
            assert point.threshold_index == min(max(round(factor * t_d), 1), W.shape[1] ** 2)

    def test_neighbor_counts(self, orthogonal_union):
        W, truth = orthogonal_union
        points = evaluation.sweep_neighbors(W, NlsConfig(rank=8), [3, 4, 5], truth, workers=2)
        assert [p.error_rate for p in points] == [0.0, 0.0, 0.0]

    def test_all_points_as_neighbors(self, orthogonal_union):
        W, truth = orthogonal_union
        points = evaluation.sweep_neighbors(W, NlsConfig(rank=8), [W.shape[1] - 1], truth,
                                            skip_failures=True)
        assert len(points) == 1
        assert points[0].error_rate is not None or points[0].failure

    def test_invalid_values(self, orthogonal_union):
        W, truth = orthogonal_union
        with pytest.raises(ParameterError):
            evaluation.sweep_threshold(W, NlsConfig(rank=8), [0.0], truth)
        with pytest.raises(ParameterError):
            evaluation.sweep_neighbors(W, NlsConfig(rank=8), [1], truth)
