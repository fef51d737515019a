"""A reduced version of the active-versus-passive comparison.

Runs every method over a few values of k and seeds and prints the per-cell
summary. Raise T, the seeds and the ks to reach the full benchmark
(T=200, n=1000, m=100, 10 seeds, k in 5, 10, 20; about a minute and a half).
"""
import csv
import tempfile
from pathlib import Path

from activetask.experiment import ExperimentConfig, run_experiment

with tempfile.TemporaryDirectory() as tmp:
    config = ExperimentConfig(methods=["da", "active-da", "da-ss", "active-da-ss", "multitask", "fully-labeled"],
                              ks=[5, 10], seeds=[0, 1, 2], output=tmp, T=60, n=500, m=100, timing=False)
    run_experiment(config)
    with open(Path(tmp) / "results_summary.csv") as fh:
        for row in csv.DictReader(fh):
            print(f"{row['method']:>14s} k={row['k']:>2s}  {float(row['mean']):.3f} +- {float(row['stderr']):.3f}")
