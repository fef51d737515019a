import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from activetask.bound import (
    BoundConfig,
    BoundReport,
    bound_report,
    coefficient_A,
    coefficient_B,
    coefficient_C,
    coefficient_D,
    complexity_terms,
    discrepancy_correction,
    lambda_diagnostic,
    load_report,
    save_report,
)
from activetask.discrepancy import build_matrix
from activetask.exceptions import MissingLabelsError, ValidationError
from activetask.learners import CVConfig, LinearModel, evaluate, train_transfer_models
from activetask.selection import WeightMatrix, assign_nearest_source, mixed_norm_21
from activetask.tasks import TaskCollection, draw_labeled_subsets, generate_synthetic, synthetic_labels

getcontext().prec = 40


def decimal_A(d, k, m):
    d, k, m = Decimal(d), Decimal(k), Decimal(m)
    return float((2 * d * (1 + (k * m / d).ln()) / m).sqrt())


def decimal_B(m, delta):
    return float(((Decimal(4) / Decimal(str(delta))).ln() / (2 * Decimal(m))).sqrt())


class TestCoefficients:
    def test_A_value(self):
        assert abs(coefficient_A(3, 10, 100) - 0.639) <= 1e-3
        assert abs(coefficient_A(3, 10, 100) - decimal_A(3, 10, 100)) <= 1e-12

    def test_B_value(self):
        assert abs(coefficient_B(100, 0.05) - 0.148) <= 1e-3
        assert abs(coefficient_B(100, 0.05) - decimal_B(100, 0.05)) <= 1e-12

    def test_C_D_closed_forms(self):
        d, n, T, delta = 3, 1000, 50, 0.05
        C = math.sqrt(8 * (math.log(T) + d * math.log(math.e * n * T / d)) / n) + math.sqrt(2 / n * math.log(4 / delta))
        D = 2 * math.sqrt((2 * d * math.log(2 * n) + 2 * math.log(T) + math.log(4 / delta)) / n)
        assert coefficient_C(d, n, T, delta) == pytest.approx(C, abs=1e-14)
        assert coefficient_D(d, n, T, delta) == pytest.approx(D, abs=1e-14)

    def test_decay_in_n(self):
        assert coefficient_C(3, 10**6, 100) < coefficient_C(3, 10**3, 100)
        assert coefficient_D(3, 10**6, 100) < coefficient_D(3, 10**3, 100)
        assert discrepancy_correction(3, 10**6) < discrepancy_correction(3, 10**3)

    @pytest.mark.parametrize("d,k,m", [(3, 1, 10), (3, 10, 100), (6, 20, 50), (2, 200, 1000)])
    def test_decay_in_m(self, d, k, m):
        assert coefficient_A(d, k, 4 * m) < coefficient_A(d, k, m)
        assert coefficient_B(4 * m) < coefficient_B(m)

    @pytest.mark.parametrize("T,k", [(10, 1), (10, 10), (200, 7)])
    def test_rate_identities(self, T, k):
        A = coefficient_A(3, k, 100)
        uniform = np.zeros((T, T))
        uniform[:, :k] = 1 / k
        assert abs(A / T * mixed_norm_21(uniform) - A / math.sqrt(k)) <= 1e-12
        one_hot = np.zeros((T, T))
        one_hot[np.arange(T), np.arange(T) % k] = 1
        assert abs(A / T * mixed_norm_21(one_hot) - A) <= 1e-12

    def test_domain_errors(self):
        with pytest.raises(ValidationError, match="logarithm"):
            coefficient_B(100, delta=-1.0)
        with pytest.raises(ValidationError, match="radicand"):
            coefficient_B(100, delta=5.0)

    @pytest.mark.parametrize("kwargs", [dict(d=0), dict(delta=1.0), dict(m=2000), dict(k=60)])
    def test_config_validation(self, kwargs):
        base = dict(d=3, k=5, m=100, n=1000, T=50)
        with pytest.raises(ValidationError):
            BoundConfig(**{**base, **kwargs})


class TestReport:
    def test_realizable_self_assignment(self):
        coll = generate_synthetic(T=4, n=200, m=50, n_test=10, seed=1)
        D = build_matrix(coll)
        alpha = assign_nearest_source(D, range(4))
        models = [LinearModel(*s.bayes_model()) for s in coll.specs]
        subsets = draw_labeled_subsets(coll, range(4), seed=0)
        report = bound_report(coll, D, alpha, models, subsets, BoundConfig(3, 4, 50, 200, 4))
        assert report.weighted_train_error == 0 and report.weighted_disc == 0

    def test_reassembly_and_signs(self, small_coll):
        D = build_matrix(small_coll)
        alpha = assign_nearest_source(D, (1, 6))
        subsets = draw_labeled_subsets(small_coll, alpha.I, seed=0)
        models, _ = train_transfer_models(small_coll, alpha, subsets)
        r = bound_report(small_coll, D, alpha, models, subsets, BoundConfig(3, 2, 20, 60, 8))
        total = r.weighted_train_error + r.weighted_disc + r.A / 8 * r.norm21 + r.B / 8 * r.norm12 + r.C + r.D
        assert r.total_computable == total
        assert r.total_computable >= r.weighted_train_error
        assert all(getattr(r, f) >= 0 for f in ("A", "B", "C", "D", "norm21", "norm12", "weighted_disc"))

    def test_exceeds_test_error(self):
        hits = 0
        for seed in range(10):
            coll = generate_synthetic(T=50, n=1000, m=100, n_test=1000, seed=seed)
            D = build_matrix(coll, seed)
            I = tuple(sorted(np.random.default_rng(seed).choice(50, 5, replace=False)))
            alpha = assign_nearest_source(D, I)
            subsets = draw_labeled_subsets(coll, I, seed)
            models, _ = train_transfer_models(coll, alpha, subsets, CVConfig(seed=seed, repeats=1))
            r = bound_report(coll, D, alpha, models, subsets, BoundConfig(3, 5, 100, 1000, 50))
            hits += r.total_computable >= evaluate(models, coll)[1]
        assert hits >= 9

    def test_shape_mismatch(self, small_coll):
        alpha = WeightMatrix(np.eye(8), range(8))
        with pytest.raises(ValidationError):
            bound_report(small_coll, np.zeros((7, 7)), alpha, [None] * 8, [], BoundConfig(3, 8, 20, 60, 8))

    def test_missing_subset(self, small_coll):
        alpha = assign_nearest_source(np.ones((8, 8)) - np.eye(8), (0,))
        with pytest.raises(MissingLabelsError):
            bound_report(small_coll, np.ones((8, 8)) - np.eye(8), alpha, [LinearModel([0, 0], 0)] * 8, [],
                         BoundConfig(3, 1, 20, 60, 8))

    def test_round_trip(self, tmp_path):
        r = BoundReport.assemble(0.6, 0.1, 1.2, 0.5, 40.0, 30.0, 0.2, 0.05, 50, 0.4, lambda_estimate=0.3)
        save_report(r, tmp_path / "b.txt")
        assert load_report(tmp_path / "b.txt") == r
        assert "total_computable=" in (tmp_path / "b.txt").read_text()


class TestLambdaDiagnostic:
    @staticmethod
    def pair(mu_a, mu_b, seed=0):
        rng = np.random.default_rng(seed)
        means = np.array([mu_a, mu_b], dtype=float)
        X = means[:, None, :] + rng.standard_normal((2, 500, 2))
        Xt = means[:, None, :] + rng.standard_normal((2, 1000, 2))
        labels = [synthetic_labels(mu, x) for mu, x in zip(means, X)]
        tests = [(x, synthetic_labels(mu, x)) for mu, x in zip(means, Xt)]
        return TaskCollection(X, labels, m=10, tests=tests)

    def test_same_task(self):
        coll = self.pair((2, 1), (2, 1))
        assert lambda_diagnostic(coll, 0, 0) <= 0.05

    def test_identical_means(self):
        assert lambda_diagnostic(self.pair((-3, 2), (-3, 2)), 0, 1) <= 0.1

    def test_opposite_means(self):
        assert lambda_diagnostic(self.pair((3, 1), (-3, -1)), 0, 1) >= 0.8

    def test_missing_labels(self):
        coll = TaskCollection(np.zeros((2, 3, 2)), None, m=1)
        with pytest.raises(MissingLabelsError):
            lambda_diagnostic(coll, 0, 1)
