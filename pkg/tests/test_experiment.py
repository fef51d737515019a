import csv

import numpy as np
import pytest

from activetask.cli import main
from activetask.discrepancy import build_matrix
from activetask.exceptions import ValidationError
from activetask.experiment import ExperimentConfig, parse_config, run_cell, run_experiment, select_tasks
from activetask.learners import CVConfig
from activetask.selection import ObjectiveConfig, random_labeled_set
from activetask.tasks import generate_synthetic

SMALL = "T=20\nn=200\nm=50\nn_test=200\ntiming=false\n"


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_lists_and_repeats(self):
        cfg = parse_config("method=da,active-da\nmethod=da-ss\nk=5\nk=10,20\nseed=1,2\ndelta=0.1\n# note\n")
        assert cfg.methods == ["da", "active-da", "da-ss"] and cfg.ks == [5, 10, 20] and cfg.seeds == [1, 2]
        assert cfg.delta == 0.1

    @pytest.mark.parametrize("text", ["method=da\nk=5\n", "method=magic\nk=5\nseed=0\n", "method=da\nk=500\nseed=0\n",
                                      "method=da\nk=5\nseed=0\ncolour=blue\n", "method=da\nk=x\nseed=0\n",
                                      "method=da\nk=5\nseed=0\nnonsense\n"])
    def test_invalid(self, text):
        with pytest.raises(ValidationError):
            parse_config(text)


class TestSweep:
    def test_rows_and_summary(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(SMALL + f"method=da,active-da\nk=5,10\nseed=0,1,2\noutput={tmp_path / 'out'}\n")
        assert main(["experiment", str(cfg)]) == 0
        rows = read(tmp_path / "out" / "results.csv")
        assert len(rows) == 12
        assert list(rows[0]) == ["method", "k", "seed", "mean_test_error", "std_test_error", "bound_total",
                                 "wall_seconds"]
        summary = read(tmp_path / "out" / "results_summary.csv")
        assert len(summary) == 4 and list(summary[0]) == ["method", "k", "mean", "stderr"]
        for row in summary:
            own = [float(r["mean_test_error"]) for r in rows if (r["method"], r["k"]) == (row["method"], row["k"])]
            assert float(row["mean"]) == pytest.approx(np.mean(own), abs=1e-12)
            assert float(row["stderr"]) == pytest.approx(np.std(own, ddof=1) / np.sqrt(3), abs=1e-12)

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            (tmp_path / f"{name}.cfg").write_text(
                SMALL + f"method=da-ss,active-da-ss,multitask\nk=4\nseed=3\noutput={tmp_path / name}\n")
            assert main(["experiment", str(tmp_path / f"{name}.cfg")]) == 0
        for name in ("results.csv", "results_summary.csv", "multitask_gamma.csv", "cache/disc_seed3.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_failed_cell_is_recorded(self, tmp_path):
        config = ExperimentConfig(["partial-labeled", "fully-labeled"], [2], [0], output=str(tmp_path), T=20, n=200,
                                  m=40, n_test=100, timing=False)
        cells = run_experiment(config)
        assert cells["partial-labeled", 2, 0].errors is None
        assert cells["fully-labeled", 2, 0].errors is not None
        rows = read(tmp_path / "results.csv")
        assert rows[0]["mean_test_error"] == "nan" and rows[1]["mean_test_error"] != "nan"

    def test_multitask_gamma_table(self, tmp_path):
        config = ExperimentConfig(["multitask"], [3], [0, 1], output=str(tmp_path), T=10, n=100, m=30, n_test=100)
        run_experiment(config)
        table = read(tmp_path / "multitask_gamma.csv")
        assert len(table) == 11 and sum(int(r["chosen_by_test_error"]) for r in table) == 1


@pytest.fixture(scope="module")
def data():
    coll = generate_synthetic(T=30, n=200, m=40, n_test=200, seed=2)
    return coll, build_matrix(coll, 2)


class TestMethods:
    def test_passive_sets_shared(self, data):
        _, D = data
        obj = ObjectiveConfig(0.5, 0.1)
        I = random_labeled_set(30, 5, 9)
        assert select_tasks(D, "da", 5, 9, obj).I == I == select_tasks(D, "da-ss", 5, 9, obj).I

    def test_active_ignores_random_set(self, data):
        _, D = data
        obj = ObjectiveConfig(0.5, 0.1)
        assert select_tasks(D, "active-da-ss", 5, 9, obj).k == 5
        assert select_tasks(D, "active-da", 5, 9, obj).k == 5

    def test_cell_outputs(self, data):
        coll, D = data
        cell = run_cell(coll, D, "active-da", 5, 0, CVConfig(seed=0, repeats=1))
        assert cell.errors.shape == (30,) and np.isfinite(cell.bound_total) and len(cell.detail["I"]) == 5

    def test_unknown_method(self, data):
        coll, D = data
        with pytest.raises(ValidationError):
            run_cell(coll, D, "nope", 5, 0, CVConfig())
