"""Task collections: in-memory model, synthetic benchmark, CSV ingestion."""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _rng
from .exceptions import FormatError, MissingFileError, MissingLabelsError, ValidationError

__all__ = [
    "TaskCollection",
    "LabeledSubset",
    "SyntheticTaskSpec",
    "synthetic_labels",
    "generate_synthetic",
    "load_collection",
    "save_collection",
    "draw_labeled_subsets",
]


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Gaussian task with identity covariance, labeled by angle to its mean."""

    mean: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (2,) or np.any(np.abs(mean) > 5.0):
            raise ValidationError(f"synthetic mean must be a 2-vector in [-5, 5]^2, got {self.mean!r}")
        object.__setattr__(self, "mean", mean)

    def bayes_model(self):
        """(w, b) of the linear rule that generates the labels exactly."""
        return np.array([-self.mean[1], self.mean[0]]), 0.0


@dataclass(frozen=True)
class TaskCollection:
    """T tasks sharing feature dimension and unlabeled sample size.

    Attributes
    ----------
    samples : ndarray, shape (T, n, dim)
        Unlabeled sample S_t of every task.
    labels : list of (ndarray of int, shape (n,)) or None
        Labels in {-1, +1} aligned with ``samples[t]``; None for tasks
        whose labels are unavailable.
    m : int
        Number of points revealed when a task is selected for labeling.
    tests : list of (X, y) or None
        Held-out evaluation data per task.
    """

    samples: np.ndarray
    labels: list
    m: int
    tests: list = None
    ids: tuple = None
    specs: tuple = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=float)
        if X.ndim != 3:
            raise ValidationError(f"samples must have shape (T, n, dim), got {X.shape}")
        T, n, dim = X.shape
        if T < 1 or n < 1 or dim < 1:
            raise ValidationError(f"empty collection: shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("samples contain non-finite values")
        if not 1 <= self.m <= n:
            raise ValidationError(f"m={self.m} must satisfy 1 <= m <= n={n}")
        labels = list(self.labels) if self.labels is not None else [None] * T
        if len(labels) != T:
            raise ValidationError(f"{len(labels)} label entries for {T} tasks")
        for t, y in enumerate(labels):
            if y is None:
                continue
            y = np.asarray(y)
            if y.shape != (n,):
                raise ValidationError(f"task {t}: labels shape {y.shape}, expected ({n},)")
            _check_label_domain(y, f"task {t}")
            labels[t] = y.astype(np.int8)
        tests = list(self.tests) if self.tests is not None else [None] * T
        if len(tests) != T:
            raise ValidationError(f"{len(tests)} test entries for {T} tasks")
        for t, pair in enumerate(tests):
            if pair is None:
                continue
            Xt, yt = np.asarray(pair[0], dtype=float), np.asarray(pair[1])
            if Xt.ndim != 2 or Xt.shape[1] != dim or yt.shape != (Xt.shape[0],):
                raise ValidationError(f"task {t}: test set shapes {Xt.shape}, {yt.shape} inconsistent with dim={dim}")
            _check_label_domain(yt, f"task {t} test")
            tests[t] = (Xt, yt.astype(np.int8))
        ids = tuple(self.ids) if self.ids is not None else tuple(str(t) for t in range(T))
        if len(ids) != T or len(set(ids)) != T:
            raise ValidationError("task ids must be unique, one per task")
        X.setflags(write=False)
        object.__setattr__(self, "samples", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "ids", ids)

    @property
    def T(self):
        return self.samples.shape[0]

    @property
    def n(self):
        return self.samples.shape[1]

    @property
    def dim(self):
        return self.samples.shape[2]

    def has_labels(self, t):
        return self.labels[t] is not None

    def has_test(self, t):
        return self.tests[t] is not None

    def labeled_points(self, subset):
        """Features and labels of the rows designated by a LabeledSubset."""
        y = self.labels[subset.task]
        if y is None:
            raise MissingLabelsError(f"task {subset.task} has no labels")
        return self.samples[subset.task][subset.indices], y[subset.indices]


@dataclass(frozen=True)
class LabeledSubset:
    task: int
    indices: np.ndarray

    def __len__(self):
        return len(self.indices)


def _check_label_domain(y, where):
    bad = ~np.isin(y, (-1, 1))
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"{where}: label {y[j]!r} at position {j} outside {{-1, +1}}")


def synthetic_labels(mean, X):
    """+1 where the counter-clockwise angle from ``mean`` to x is in (0, pi).

    Computed as the sign of the 2-D cross product mean x X; exact zeros
    (angle 0 or pi) map to -1.
    """
    X = np.asarray(X, dtype=float)
    cross = mean[0] * X[..., 1] - mean[1] * X[..., 0]
    return np.where(cross > 0, 1, -1).astype(np.int8)


def _check_count(name, value):
    if int(value) != value or value < 1:
        raise ValidationError(f"{name} must be a positive integer, got {value!r}")


def generate_synthetic(T, n, m, n_test=1000, seed=0):
    """Draw the 2-D rotating-halfplane benchmark.

    Each task has mean mu_t ~ U([-5, 5]^2), points x ~ N(mu_t, I_2) and
    label +1 iff x lies counter-clockwise from mu_t by an angle in (0, pi).
    Test points are fresh draws from the same task distribution.
    Task t uses its own random stream, so a task's data does not depend on T.
    """
    for name, value in (("T", T), ("n", n), ("m", m), ("n_test", n_test)):
        _check_count(name, value)
    if m > n:
        raise ValidationError(f"m={m} exceeds n={n}")
    samples = np.empty((T, n, 2))
    labels, tests, specs = [], [], []
    for t in range(T):
        rng = _rng.stream(seed, _rng.SYNTHETIC, t)
        mean = rng.uniform(-5.0, 5.0, size=2)
        X = mean + rng.standard_normal((n, 2))
        Xt = mean + rng.standard_normal((n_test, 2))
        samples[t] = X
        labels.append(synthetic_labels(mean, X))
        tests.append((Xt, synthetic_labels(mean, Xt)))
        specs.append(SyntheticTaskSpec(mean))
    return TaskCollection(samples, labels, m, tests=tests, specs=tuple(specs),
                          meta={"source": "synthetic", "seed": int(seed)})


# -- on-disk format ---------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def _write_rows(path, X, y=None):
    with open(path, "w", newline="") as fh:
        for j in range(X.shape[0]):
            row = [_fmt(v) for v in X[j]]
            if y is not None:
                row.append(str(int(y[j])))
            fh.write(",".join(row) + "\n")


def save_collection(coll, directory):
    """Write ``manifest.json`` plus one CSV per task (and per test set)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for t, tid in enumerate(coll.ids):
        data = f"task_{tid}.csv"
        _write_rows(directory / data, coll.samples[t], coll.labels[t])
        test = None
        if coll.tests[t] is not None:
            test = f"test_{tid}.csv"
            _write_rows(directory / test, *coll.tests[t])
        entries.append({"id": tid, "data": data, "labeled": coll.labels[t] is not None, "test": test})
    manifest = {"T": coll.T, "dim": coll.dim, "n": coll.n, "m": coll.m, "tasks": entries}
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return directory / "manifest.json"


def _read_rows(path, dim, labeled):
    if not path.is_file():
        raise MissingFileError(path)
    width = dim + 1 if labeled else dim
    X, y = [], []
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise FormatError(path, f"expected {width} columns, found {len(row)}", row_no)
            try:
                values = [float(c) for c in row[:dim]]
            except ValueError as exc:
                raise FormatError(path, f"non-numeric field ({exc})", row_no) from None
            if not all(np.isfinite(values)):
                raise FormatError(path, "non-finite value", row_no)
            X.append(values)
            if labeled:
                try:
                    label = float(row[dim])
                except ValueError:
                    raise FormatError(path, f"non-numeric label {row[dim]!r}", row_no) from None
                if label not in (-1.0, 1.0):
                    raise FormatError(path, f"label {row[dim].strip()} outside {{-1, +1}}", row_no)
                y.append(int(label))
    X = np.array(X, dtype=float).reshape(-1, dim)
    return X, (np.array(y, dtype=np.int8) if labeled else None)


def load_collection(manifest_path):
    """Read and validate a dataset directory (or its ``manifest.json``)."""
    path = Path(manifest_path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise MissingFileError(path)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
        T, dim, n, m = (int(manifest[key]) for key in ("T", "dim", "n", "m"))
        entries = manifest["tasks"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, f"malformed manifest ({exc})") from None
    if len(entries) != T:
        raise FormatError(path, f"manifest declares T={T} but lists {len(entries)} tasks")
    root = path.parent
    samples, labels, tests, ids = [], [], [], []
    for entry in entries:
        data_path = root / entry["data"]
        X, y = _read_rows(data_path, dim, bool(entry.get("labeled", False)))
        if X.shape[0] != n:
            raise FormatError(data_path, f"{X.shape[0]} rows, manifest declares n={n}")
        samples.append(X)
        labels.append(y)
        if entry.get("test"):
            tests.append(_read_rows(root / entry["test"], dim, True))
        else:
            tests.append(None)
        ids.append(str(entry["id"]))
    try:
        return TaskCollection(np.stack(samples), labels, m, tests=tests, ids=tuple(ids),
                              meta={"source": str(path)})
    except ValidationError as exc:
        raise FormatError(path, str(exc)) from None


def draw_labeled_subsets(coll, I, seed, size=None):
    """Uniform without-replacement label subsets for the tasks in ``I``.

    The subset of task i depends only on (seed, i), so a task receives the
    same labeled rows whichever other tasks are selected. Smaller ``size``
    values return prefixes of the same permutation.
    """
    size = coll.m if size is None else int(size)
    if not 1 <= size <= coll.n:
        raise ValidationError(f"subset size {size} outside [1, n={coll.n}]")
    subsets = []
    for i in I:
        i = int(i)
        if not 0 <= i < coll.T:
            raise ValidationError(f"task index {i} outside [0, {coll.T})")
        if not coll.has_labels(i):
            raise MissingLabelsError(f"task {i} ({coll.ids[i]}) was selected but has no labels")
        perm = _rng.stream(seed, _rng.SUBSET, i).permutation(coll.n)
        subsets.append(LabeledSubset(i, perm[:size]))
    return subsets
