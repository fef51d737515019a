"""Keyed random streams.

Every random draw in the package comes from a generator keyed by the user
seed plus a small tuple of integers (stream tag, task index, ...). Streams
are therefore independent of evaluation order and worker count.
"""
import numpy as np

SYNTHETIC = 1
SUBSET = 2
PASSIVE_SET = 3
SEEDING = 4
CV_FOLDS = 5
PAIR = 6


def stream(seed, *key):
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng([seed, *(int(k) for k in key)])
