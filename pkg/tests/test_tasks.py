import json

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from activetask.exceptions import FormatError, MissingFileError, MissingLabelsError, ValidationError
from activetask.learners import LinearModel
from activetask.tasks import (
    LabeledSubset,
    SyntheticTaskSpec,
    TaskCollection,
    draw_labeled_subsets,
    generate_synthetic,
    load_collection,
    save_collection,
    synthetic_labels,
)


class TestSyntheticLabels:
    def test_counter_clockwise_is_positive(self):
        assert synthetic_labels(np.array([1.0, 0.0]), np.array([[0.0, 1.0]]))[0] == 1

    def test_clockwise_is_negative(self):
        assert synthetic_labels(np.array([1.0, 0.0]), np.array([[0.0, -1.0]]))[0] == -1

    def test_collinear_tie_is_negative(self):
        mean = np.array([1.0, 2.0])
        assert list(synthetic_labels(mean, np.array([[2.0, 4.0], [-1.0, -2.0]]))) == [-1, -1]

    def test_balanced_classes(self):
        # the boundary passes through the mean, so each side carries half the mass
        coll = generate_synthetic(T=3, n=100_000, m=1, n_test=1, seed=11)
        for t in range(coll.T):
            assert abs(np.mean(coll.labels[t] == 1) - 0.5) <= 0.01

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10), st.floats(-10, 10))
    def test_reflection_flips_label(self, mx, my, x, y):
        mean = np.array([mx, my])
        assume(np.linalg.norm(mean) > 0.1 and abs(mx * y - my * x) > 1e-6)
        u = mean / np.linalg.norm(mean)
        p = np.array([x, y])
        # mirror image across the line through the origin and the mean
        r = 2 * (p @ u) * u - p
        a = synthetic_labels(mean, p[None])[0]
        assert synthetic_labels(mean, r[None])[0] == -a


class TestGenerateSynthetic:
    def test_shapes_and_ranges(self):
        coll = generate_synthetic(T=5, n=40, m=10, n_test=30, seed=0)
        assert (coll.T, coll.n, coll.dim, coll.m) == (5, 40, 2, 10)
        for spec in coll.specs:
            assert np.all(np.abs(spec.mean) <= 5)
        assert all(Xt.shape == (30, 2) for Xt, _ in coll.tests)

    def test_deterministic(self):
        a = generate_synthetic(T=4, n=30, m=5, n_test=10, seed=9)
        b = generate_synthetic(T=4, n=30, m=5, n_test=10, seed=9)
        assert np.array_equal(a.samples, b.samples)
        assert all(np.array_equal(x, y) for x, y in zip(a.labels, b.labels))

    def test_tasks_independent_of_T(self):
        a = generate_synthetic(T=3, n=30, m=5, n_test=10, seed=9)
        b = generate_synthetic(T=7, n=30, m=5, n_test=10, seed=9)
        assert np.array_equal(a.samples, b.samples[:3])

    def test_realizable_by_bayes_model(self):
        coll = generate_synthetic(T=6, n=500, m=5, n_test=500, seed=4)
        for t, spec in enumerate(coll.specs):
            w, b = spec.bayes_model()
            model = LinearModel(w, b)
            assert model.error(coll.samples[t], coll.labels[t]) == 0.0
            assert model.error(*coll.tests[t]) <= 0.01

    def test_nearby_tasks_share_predictors(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            mu = rng.uniform(-4.5, 4.5, size=2)
            if np.linalg.norm(mu) < 1:
                continue
            nu = mu + rng.uniform(-0.07, 0.07, size=2)
            Xt = nu + rng.standard_normal((1000, 2))
            model = LinearModel(*SyntheticTaskSpec(mu).bayes_model())
            assert model.error(Xt, synthetic_labels(nu, Xt)) <= 0.1

    @pytest.mark.parametrize("kwargs", [dict(T=0, n=5, m=1), dict(T=2, n=5, m=6), dict(T=2, n=5, m=0),
                                        dict(T=2, n=5, m=1, n_test=0)])
    def test_invalid_counts(self, kwargs):
        with pytest.raises(ValidationError):
            generate_synthetic(**kwargs)

    def test_spec_range(self):
        with pytest.raises(ValidationError):
            SyntheticTaskSpec(np.array([5.5, 0.0]))


class TestTaskCollection:
    def test_rejects_bad_labels(self):
        with pytest.raises(ValidationError, match="outside"):
            TaskCollection(np.zeros((1, 3, 2)), [np.array([1, 0, -1])], m=1)

    def test_rejects_m_above_n(self):
        with pytest.raises(ValidationError):
            TaskCollection(np.zeros((1, 3, 2)), None, m=4)

    def test_immutable_samples(self, small_coll):
        with pytest.raises(ValueError):
            small_coll.samples[0, 0, 0] = 1.0


class TestPersistence:
    def test_round_trip(self, small_coll, tmp_path):
        save_collection(small_coll, tmp_path)
        back = load_collection(tmp_path / "manifest.json")
        assert np.array_equal(back.samples, small_coll.samples)
        assert all(np.array_equal(a, b) for a, b in zip(back.labels, small_coll.labels))
        assert all(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
                   for a, b in zip(back.tests, small_coll.tests))
        assert back.m == small_coll.m

    def _write(self, root, rows, n=4, dim=3, labeled=True):
        manifest = {"T": 2, "dim": dim, "n": n, "m": 2, "tasks": [
            {"id": "a", "data": "task_a.csv", "labeled": labeled, "test": None},
            {"id": "b", "data": "task_b.csv", "labeled": False, "test": None}]}
        (root / "manifest.json").write_text(json.dumps(manifest))
        (root / "task_a.csv").write_text("\n".join(rows) + "\n")
        (root / "task_b.csv").write_text("\n".join(["0,0,0"] * n) + "\n")

    def test_manifest_shapes(self, tmp_path):
        self._write(tmp_path, ["1,2,3,1", "4,5,6,-1", "0,0,0,1", "1,1,1,-1"])
        coll = load_collection(tmp_path)
        assert (coll.T, coll.dim, coll.n) == (2, 3, 4)
        assert coll.has_labels(0) and not coll.has_labels(1)

    def test_row_count_error_names_file(self, tmp_path):
        self._write(tmp_path, ["1,2,3,1"] * 5)
        with pytest.raises(FormatError, match="task_a.csv"):
            load_collection(tmp_path)

    def test_label_domain_error(self, tmp_path):
        self._write(tmp_path, ["1,2,3,1", "1,2,3,0", "1,2,3,1", "1,2,3,1"])
        with pytest.raises(FormatError, match=r"task_a.csv:2:.*outside"):
            load_collection(tmp_path)

    def test_non_numeric_error(self, tmp_path):
        self._write(tmp_path, ["1,2,3,1", "1,2,3,1", "1,x,3,1", "1,2,3,1"])
        with pytest.raises(FormatError, match=r"task_a.csv:3:"):
            load_collection(tmp_path)

    def test_dimension_error(self, tmp_path):
        self._write(tmp_path, ["1,2,1"] * 4)
        with pytest.raises(FormatError, match="columns"):
            load_collection(tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFileError):
            load_collection(tmp_path / "nope")


class TestLabeledSubsets:
    def test_full_subset_is_permutation(self):
        coll = generate_synthetic(T=2, n=12, m=12, n_test=1, seed=0)
        (sub,) = draw_labeled_subsets(coll, [1], seed=4)
        assert sorted(sub.indices) == list(range(12))

    def test_deterministic_and_independent_of_I(self, small_coll):
        a = draw_labeled_subsets(small_coll, [1, 4], seed=2)
        b = draw_labeled_subsets(small_coll, [4, 6], seed=2)
        assert np.array_equal(a[1].indices, b[0].indices)
        assert all(len(s) == small_coll.m and len(set(s.indices)) == small_coll.m for s in a)

    def test_uniform(self):
        coll = generate_synthetic(T=1, n=10, m=1, n_test=1, seed=0)
        counts = np.zeros(10)
        for seed in range(10_000):
            counts[draw_labeled_subsets(coll, [0], seed)[0].indices[0]] += 1
        assert np.all(np.abs(counts / 10_000 - 0.1) <= 0.01)

    def test_missing_labels(self):
        coll = TaskCollection(np.zeros((2, 4, 1)), [None, np.ones(4)], m=2)
        with pytest.raises(MissingLabelsError):
            draw_labeled_subsets(coll, [0], seed=0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 2**31))
    def test_subset_invariants(self, m, seed):
        coll = generate_synthetic(T=2, n=30, m=m, n_test=1, seed=1)
        (sub,) = draw_labeled_subsets(coll, [0], seed)
        assert len(set(sub.indices.tolist())) == m and sub.indices.max() < 30
