"""Choosing which tasks to label.

The objective trades the weighted discrepancy between each task and the
labeled tasks it borrows from against two mixed norms of the weight matrix
that penalise concentrating on few sources. Active selection minimises it
over the labeled set as well; passive selection draws the set at random.
"""
import numpy as np

from activetask import (
    ObjectiveConfig,
    assign_nearest_source,
    build_matrix,
    generate_synthetic,
    objective_value,
    optimize_weights,
    select_active_grasp,
    select_active_kmedoids,
)
from activetask.selection import kmedoids_objective, random_labeled_set

coll = generate_synthetic(T=100, n=1000, m=100, seed=2)
D = build_matrix(coll)
k = 10
cfg = ObjectiveConfig.from_bound(d=coll.dim + 1, k=k, m=coll.m)
print(f"A={cfg.A:.3f}, B={cfg.B:.3f}")

I_random = random_labeled_set(coll.T, k, seed=0)
passive = optimize_weights(D, I_random, cfg)
I_active, active = select_active_grasp(D, k, cfg, seed=0)
print(f"weights on a random set: objective {objective_value(passive, D, cfg):.4f}")
print(f"GraSP selection {I_active}: objective {objective_value(active, D, cfg):.4f}")
print("sources used per task (active):", np.round(np.mean((active.values > 1e-3).sum(axis=1)), 2))

# Single-source transfer reduces to k-medoids on the discrepancy matrix.
I_med, assignment = select_active_kmedoids(D, k, seed=0)
print(f"k-medoids {I_med}: mean distance to source {kmedoids_objective(D, I_med):.4f} "
      f"vs random {kmedoids_objective(D, I_random):.4f}")
print("every medoid is its own source:", all(assignment[i] == i for i in I_med))
single = assign_nearest_source(D, I_med)
print(f"one-hot objective: {objective_value(single, D, cfg):.4f}")
