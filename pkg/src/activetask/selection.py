"""Choosing labeled tasks and transfer weights from a discrepancy matrix.

The objective minimised everywhere is

    f(alpha) = (1/T) sum_t sum_{i in I} alpha[t, i] D[t, i]
               + (A/T) ||alpha||_{2,1} + (B/T) ||alpha||_{1,2}

over row-stochastic ``alpha`` whose support lies in the labeled set ``I``.
"""
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _rng
from .exceptions import FormatError, MissingFileError, ValidationError

__all__ = [
    "WeightMatrix",
    "ObjectiveConfig",
    "mixed_norm_21",
    "mixed_norm_12",
    "objective_value",
    "project_row_to_simplex",
    "project_rows_to_simplex",
    "optimize_weights",
    "kmeanspp_seed",
    "select_active_grasp",
    "select_active_kmedoids",
    "kmedoids_objective",
    "assign_nearest_source",
    "random_labeled_set",
    "save_selection",
    "load_selection",
]

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class WeightMatrix:
    """Row-stochastic T x T transfer weights supported on the columns in ``I``."""

    values: np.ndarray
    I: tuple

    def __post_init__(self):
        alpha = np.array(self.values, dtype=float)
        I = tuple(sorted(int(i) for i in self.I))
        if alpha.ndim != 2 or alpha.shape[0] != alpha.shape[1]:
            raise ValidationError(f"weight matrix must be square, got shape {alpha.shape}")
        T = alpha.shape[0]
        if not I or len(set(I)) != len(I) or I[0] < 0 or I[-1] >= T:
            raise ValidationError(f"labeled set {I} invalid for T={T}")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise ValidationError("weights must be finite and non-negative")
        outside = np.ones(T, dtype=bool)
        outside[list(I)] = False
        if np.any(alpha[:, outside] != 0):
            raise ValidationError("support violation: weight on a column outside the labeled set")
        sums = alpha.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            t = int(np.argmax(np.abs(sums - 1.0)))
            raise ValidationError(f"row {t} sums to {sums[t]!r}, not 1")
        alpha.setflags(write=False)
        object.__setattr__(self, "values", alpha)
        object.__setattr__(self, "I", I)

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def k(self):
        return len(self.I)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def row(self, t):
        """Weights of task t over the labeled tasks, ordered as ``I``."""
        return self.values[t, list(self.I)]

    @classmethod
    def from_columns(cls, X, I, T):
        alpha = np.zeros((T, T))
        alpha[:, sorted(I)] = X
        return cls(alpha, tuple(I))


@dataclass(frozen=True)
class ObjectiveConfig:
    """Coefficients of the bound surrogate plus solver controls."""

    A: float
    B: float
    tol: float = 1e-6
    max_iter: int = 500
    smoothing: float = 1e-12
    step_init: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_outer: int = 50

    def __post_init__(self):
        if self.A < 0 or self.B < 0:
            raise ValidationError(f"A and B must be non-negative, got A={self.A}, B={self.B}")
        if self.tol <= 0:
            raise ValidationError("tol must be positive")
        if not 0 < self.shrink < 1:
            raise ValidationError("shrink must lie in (0, 1)")

    @classmethod
    def from_bound(cls, d, k, m, delta=0.05, **kwargs):
        """A and B evaluated from the complexity constants for (d, k, m, delta)."""
        from .bound import coefficient_A, coefficient_B

        return cls(A=coefficient_A(d, k, m), B=coefficient_B(m, delta), **kwargs)


def _values(alpha):
    return alpha.values if isinstance(alpha, WeightMatrix) else np.asarray(alpha, dtype=float)


def mixed_norm_21(alpha):
    """Sum over tasks of the l2 norm of each weight row."""
    return float(np.linalg.norm(_values(alpha), axis=1).sum())


def mixed_norm_12(alpha):
    """l2 norm of the vector of column sums."""
    return float(np.linalg.norm(_values(alpha).sum(axis=0)))


def _D(D):
    return D.values if hasattr(D, "values") else np.asarray(D, dtype=float)


def objective_value(alpha, D, cfg, I=None):
    a = _values(alpha)
    D = _D(D)
    if a.shape != D.shape:
        raise ValidationError(f"weights {a.shape} and discrepancies {D.shape} differ in shape")
    if I is None and isinstance(alpha, WeightMatrix):
        I = alpha.I
    if I is not None:
        mask = np.ones(a.shape[1], dtype=bool)
        mask[list(I)] = False
        if np.any(a[:, mask] != 0):
            raise ValidationError("support violation: weight on a column outside the labeled set")
    T = a.shape[0]
    return float((a * D).sum() / T + cfg.A * mixed_norm_21(a) / T + cfg.B * mixed_norm_12(a) / T)


def project_rows_to_simplex(V):
    """Row-wise Euclidean projection onto {x >= 0, sum x = 1} (sort-based)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    # shifting a row leaves its projection unchanged and keeps the support entries in [-1, 0]
    V = V - V.max(axis=1, keepdims=True)
    k = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    ind = np.arange(1, k + 1)
    cond = U - css / ind > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(V.shape[0]), rho] / (rho + 1)
    return np.maximum(V - theta[:, None], 0.0)


def project_row_to_simplex(v):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise ValidationError("expected a non-empty finite vector")
    return project_rows_to_simplex(v[None])[0]


class _Surrogate:
    """Objective and gradient restricted to the columns of a support."""

    def __init__(self, D, cols, cfg):
        self.DI = _D(D)[:, cols]
        self.T = self.DI.shape[0]
        self.cfg = cfg

    def value(self, X):
        cfg = self.cfg
        return float(((X * self.DI).sum() + cfg.A * np.linalg.norm(X, axis=1).sum()
                      + cfg.B * np.linalg.norm(X.sum(axis=0))) / self.T)

    def gradient(self, X):
        cfg = self.cfg
        rows = np.linalg.norm(X, axis=1)
        cols = X.sum(axis=0)
        g = self.DI + cfg.A * X / (rows[:, None] + cfg.smoothing)
        g = g + cfg.B * cols[None, :] / (np.linalg.norm(cols) + cfg.smoothing)
        return g / self.T


def _check_support(I, T):
    I = sorted(int(i) for i in I)
    if not I:
        raise ValidationError("labeled set must contain at least one task (k >= 1)")
    if len(set(I)) != len(I) or I[0] < 0 or I[-1] >= T:
        raise ValidationError(f"labeled set {I} invalid for T={T}")
    return I


def _pgd(f, X, cfg):
    """Projected gradient descent with Armijo backtracking.

    The trial step starts at ``cfg.step_init``, doubles after every accepted
    step and halves on rejection.
    """
    fx = f.value(X)
    trace = [fx]
    step = cfg.step_init
    for _ in range(cfg.max_iter):
        g = f.gradient(X)
        accepted = False
        while step > 1e-20:
            Xn = project_rows_to_simplex(X - step * g)
            diff = Xn - X
            if not np.any(diff):
                break
            fn = f.value(Xn)
            if fn <= fx + cfg.armijo * float((g * diff).sum()):
                accepted = True
                break
            step *= cfg.shrink
        if not accepted:
            break
        decrease = fx - fn
        X, fx = Xn, fn
        trace.append(fx)
        step *= 2.0
        if decrease <= cfg.tol * max(abs(trace[-2]), 1e-300):
            break
    return X, trace


def optimize_weights(D, I, cfg, init=None, return_trace=False):
    """Minimise the surrogate over weights supported on ``I``.

    Parameters
    ----------
    D : DiscrepancyMatrix or ndarray, shape (T, T)
    I : iterable of int
        Labeled tasks; the columns weights may use.
    cfg : ObjectiveConfig
    init : WeightMatrix or ndarray, optional
        Starting point; its columns in ``I`` are projected onto the simplex.
        Uniform weights over ``I`` by default.
    return_trace : bool
        Also return the objective value after every accepted step.
    """
    Dv = _D(D)
    T = Dv.shape[0]
    I = _check_support(I, T)
    if init is None:
        X = np.full((T, len(I)), 1.0 / len(I))
    else:
        X = project_rows_to_simplex(_values(init)[:, I])
    f = _Surrogate(Dv, I, cfg)
    X, trace = _pgd(f, X, cfg)
    if cfg.A == 0 and cfg.B == 0:
        # linear objective: the optimum is a vertex per row; snapping fixes the tie rule
        vertex = np.zeros_like(X)
        vertex[np.arange(T), np.argmin(f.DI, axis=1)] = 1.0
        fv = f.value(vertex)
        if fv <= trace[-1]:
            X = vertex
            trace.append(fv)
    alpha = WeightMatrix.from_columns(X, I, T)
    return (alpha, trace) if return_trace else alpha


def kmeanspp_seed(D, k, rng):
    """k-means++ style seeding on a precomputed dissimilarity matrix.

    First index uniform; each further index drawn with probability
    proportional to the squared dissimilarity to its nearest chosen index.
    """
    D = _D(D)
    T = D.shape[0]
    chosen = [int(rng.integers(T))]
    nearest = D[chosen[0]] ** 2
    while len(chosen) < k:
        weights = nearest.copy()
        weights[chosen] = 0.0
        total = weights.sum()
        if total <= 0:
            weights = np.ones(T)
            weights[chosen] = 0.0
            total = weights.sum()
        nxt = int(rng.choice(T, p=weights / total))
        chosen.append(nxt)
        nearest = np.minimum(nearest, D[nxt] ** 2)
    return sorted(chosen)


def _check_k(k, T):
    if int(k) != k or not 1 <= k <= T:
        raise ValidationError(f"k={k} must satisfy 1 <= k <= T={T}")
    return int(k)


def _top(scores, count):
    """Indices of the ``count`` largest scores, ties to the lowest index."""
    order = np.argsort(-scores, kind="stable")
    return [int(i) for i in order[:count]]


def _prune_by_mass(D, cols, alpha, k, cfg):
    """Drop the lightest column and re-optimise until ``k`` columns remain."""
    T = D.shape[0]
    cols = list(cols)
    while len(cols) > k:
        mass = alpha.values[:, cols].sum(axis=0)
        cols.pop(int(np.argmin(mass)))
        start = alpha.values[:, cols].copy()
        start[start.sum(axis=1) <= 0] = 1.0
        start /= start.sum(axis=1, keepdims=True)
        alpha = optimize_weights(D, cols, cfg, init=WeightMatrix.from_columns(start, cols, T))
    return cols, alpha


def select_active_grasp(D, k, cfg, seed=0, return_trace=False):
    """Joint choice of labeled tasks and weights by gradient support pursuit.

    Groups are columns of ``alpha`` (one per candidate labeled task). Each
    outer iteration ranks the columns by the l2 norm of their descent
    potential ``max(0, nu_t - grad[t, i])``, where ``nu_t`` is the
    alpha-weighted mean gradient of row t (the simplex multiplier), merges
    the top 2k columns into the support and re-optimises, then prunes back to
    k columns by repeatedly removing the column with the least total weight
    and re-optimising. The best support seen is returned with weights
    re-solved from a uniform start.
    """
    Dv = _D(D)
    T = Dv.shape[0]
    k = _check_k(k, T)
    trace = []
    if k == T:
        alpha = optimize_weights(Dv, range(T), cfg)
        return (tuple(range(T)), alpha, trace) if return_trace else (tuple(range(T)), alpha)
    support = kmeanspp_seed(Dv, k, _rng.stream(seed, _rng.SEEDING))
    alpha = optimize_weights(Dv, support, cfg)
    best_f, best_support = objective_value(alpha, Dv, cfg), support
    trace.append((tuple(support), best_f))
    full = _Surrogate(Dv, list(range(T)), cfg)
    for _ in range(cfg.max_outer):
        a = alpha.values
        g = full.gradient(a)
        nu = (a * g).sum(axis=1)
        potential = np.maximum(nu[:, None] - g, 0.0)
        scores = np.linalg.norm(potential, axis=0)
        candidates = [i for i in _top(scores, 2 * k) if scores[i] > 0]
        merged = sorted(set(support) | set(candidates))
        if len(merged) == len(support):
            break
        wide = optimize_weights(Dv, merged, cfg, init=a)
        pruned, alpha = _prune_by_mass(Dv, merged, wide, k, cfg)
        fp = objective_value(alpha, Dv, cfg)
        trace.append((tuple(pruned), fp))
        if fp < best_f:
            best_f, best_support = fp, pruned
        if pruned == support:
            break
        support = pruned
    alpha = optimize_weights(Dv, best_support, cfg)
    result = (tuple(best_support), alpha)
    return (*result, trace) if return_trace else result


def kmedoids_objective(D, I):
    """Mean over tasks of the discrepancy to the nearest task in ``I``."""
    D = _D(D)
    return float(D[:, list(I)].min(axis=1).mean())


def _nearest(D, medoids):
    """Index into ``medoids`` (sorted) of each task's nearest medoid; members map to themselves."""
    sub = D[:, medoids]
    owner = np.argmin(sub, axis=1)
    owner[medoids] = np.arange(len(medoids))
    return owner


def _best_swap(D, medoids):
    """Most improving (medoid, non-medoid) exchange, or None.

    Ties go to the lowest medoid position, then the lowest candidate index.
    """
    T = D.shape[0]
    sub = D[:, medoids]
    current = float(sub.min(axis=1).mean())
    if len(medoids) == T:
        return None, current
    order = np.argsort(sub, axis=1, kind="stable")
    rows = np.arange(T)
    first = sub[rows, order[:, 0]]
    second = sub[rows, order[:, 1]] if len(medoids) > 1 else np.full(T, np.inf)
    # nearest remaining distance after dropping each medoid position c
    without = np.where(order[None, :, 0] == np.arange(len(medoids))[:, None], second[None, :], first[None, :])
    others = np.setdiff1d(np.arange(T), medoids)
    cost = np.minimum(without[:, None, :], D[others][None, :, :]).mean(axis=2)
    c, h = np.unravel_index(int(np.argmin(cost)), cost.shape)
    if cost[c, h] < current - 1e-15:
        swapped = list(medoids)
        swapped[c] = int(others[h])
        return sorted(swapped), float(cost[c, h])
    return None, current


def select_active_kmedoids(D, k, seed=0, return_trace=False):
    """k-medoids by local search from a k-means++ start.

    Alternates between assigning tasks to their nearest medoid and moving
    each medoid to the cluster member with the smallest summed discrepancy
    to the rest of its cluster. Once no medoid moves, the single
    medoid/non-medoid exchange that lowers the objective most is applied and
    the alternation resumes; the search stops when neither step improves.

    Returns
    -------
    I : tuple of int
        Sorted medoid (labeled task) indices.
    assignment : ndarray of int, shape (T,)
        Medoid task index assigned to every task.
    """
    Dv = _D(D)
    T = Dv.shape[0]
    k = _check_k(k, T)
    medoids = kmeanspp_seed(Dv, k, _rng.stream(seed, _rng.SEEDING))
    trace = [kmedoids_objective(Dv, medoids)]
    for _ in range(10 * T + 100):
        owner = _nearest(Dv, medoids)
        moved = False
        new = list(medoids)
        for c, current in enumerate(medoids):
            members = np.flatnonzero(owner == c)
            costs = Dv[np.ix_(members, members)].sum(axis=0)
            best = members[int(np.argmin(costs))]
            if costs[members == current][0] > costs.min():
                new[c] = int(best)
                moved = True
        if moved:
            value = kmedoids_objective(Dv, sorted(new))
            # a within-cluster move never raises the objective; guard against float noise
            if value <= trace[-1]:
                medoids = sorted(new)
                trace.append(value)
                continue
        swapped, value = _best_swap(Dv, medoids)
        if swapped is None:
            break
        medoids = swapped
        trace.append(value)
    assignment = np.asarray(medoids)[_nearest(Dv, medoids)]
    result = (tuple(medoids), assignment)
    return (*result, trace) if return_trace else result


def assign_nearest_source(D, I):
    """One-hot weights on the closest labeled task; labeled tasks keep themselves."""
    Dv = _D(D)
    T = Dv.shape[0]
    I = _check_support(I, T)
    X = np.zeros((T, len(I)))
    X[np.arange(T), _nearest(Dv, I)] = 1.0
    return WeightMatrix.from_columns(X, I, T)


def random_labeled_set(T, k, seed):
    """Uniform k-subset of tasks, as used by the passive methods."""
    k = _check_k(k, T)
    rng = _rng.stream(seed, _rng.PASSIVE_SET)
    return tuple(sorted(int(i) for i in rng.choice(T, size=k, replace=False)))


# -- persistence ------------------------------------------------------------

_PAIR = re.compile(r"\(\s*(-?\d+)\s*,\s*([^()\s,]+)\s*\)")


def save_selection(directory, alpha, method, seed, alpha_file="alpha.csv"):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for t in range(alpha.T):
        lines.append(",".join(f"({i},{float(alpha.values[t, i])!r})" for i in alpha.I))
    (directory / alpha_file).write_text("\n".join(lines) + "\n")
    record = {"method": method, "k": alpha.k, "seed": int(seed), "I": list(alpha.I), "alpha_file": alpha_file}
    path = directory / "selection.json"
    path.write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
    return path


def load_selection(path):
    """Read ``selection.json`` and its weight file; returns (record, WeightMatrix)."""
    path = Path(path)
    if path.is_dir():
        path = path / "selection.json"
    if not path.is_file():
        raise MissingFileError(path)
    try:
        record = json.loads(path.read_text())
        I = [int(i) for i in record["I"]]
        k = int(record["k"])
        alpha_path = path.parent / record["alpha_file"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, f"malformed selection record ({exc})") from None
    if len(I) != k:
        raise FormatError(path, f"k={k} but I lists {len(I)} tasks")
    if not alpha_path.is_file():
        raise MissingFileError(alpha_path)
    rows = [ln for ln in alpha_path.read_text().splitlines() if ln.strip()]
    T = len(rows)
    alpha = np.zeros((T, T))
    for row_no, line in enumerate(rows, start=1):
        pairs = _PAIR.findall(line)
        if len(pairs) != k or _PAIR.sub("", line).replace(",", "").strip():
            raise FormatError(alpha_path, f"expected {k} (column,value) pairs", row_no)
        for col, val in pairs:
            col = int(col)
            if not 0 <= col < T:
                raise FormatError(alpha_path, f"column {col} outside [0, {T})", row_no)
            try:
                alpha[row_no - 1, col] = float(val)
            except ValueError:
                raise FormatError(alpha_path, f"non-numeric weight {val!r}", row_no) from None
    try:
        return record, WeightMatrix(alpha, tuple(I))
    except ValidationError as exc:
        raise FormatError(alpha_path, str(exc)) from None
