"""Weighted ridge regression, cross-validation and the reference learners."""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _rng
from .exceptions import FormatError, MissingFileError, ValidationError
from .tasks import draw_labeled_subsets

__all__ = [
    "LinearModel",
    "CVConfig",
    "DEFAULT_LAMBDA_GRID",
    "train_weighted_ridge",
    "WeightedRidgeCV",
    "cv_select_lambda",
    "train_transfer_models",
    "evaluate",
    "train_multitask_baseline",
    "multitask_objective",
    "train_fully_labeled_reference",
    "save_models",
    "load_models",
]

DEFAULT_LAMBDA_GRID = (0.0,) + tuple(10.0 ** e for e in range(-17, 9))
SINGULAR_JITTER = 1e-10


@dataclass(frozen=True)
class LinearModel:
    """``sign(w . x + b)`` with sign(0) taken as -1."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise ValidationError("model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    def decision_function(self, X):
        return np.asarray(X, dtype=float) @ self.w + self.b

    def predict(self, X):
        return np.where(self.decision_function(X) > 0, 1, -1)

    def error(self, X, y):
        if len(y) == 0:
            return 0.0
        return float(np.mean(self.predict(X) != np.asarray(y)))

    def __neg__(self):
        return LinearModel(-self.w, -self.b)

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return self.b == other.b and np.array_equal(self.w, other.w)

    @classmethod
    def from_augmented(cls, theta):
        return cls(theta[:-1], theta[-1])


@dataclass(frozen=True)
class CVConfig:
    grid: tuple = DEFAULT_LAMBDA_GRID
    repeats: int = 5
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        grid = tuple(sorted(float(g) for g in self.grid))
        if not grid or grid[0] < 0:
            raise ValidationError("lambda grid must be non-empty and non-negative")
        if self.repeats < 1 or self.folds < 2:
            raise ValidationError("need repeats >= 1 and folds >= 2")
        object.__setattr__(self, "grid", grid)


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _penalty(p):
    R = np.eye(p)
    R[-1, -1] = 0.0
    return R


def _solve_ridge(G, r, lams):
    """Solve (G + lam R) theta = r for every lam; G (..., p, p), r (..., p).

    Returns theta with shape (..., L, p). Systems that are singular at
    lam = 0 receive a 1e-10 identity jitter.
    """
    p = G.shape[-1]
    lams = np.asarray(lams, dtype=float)
    M = G[..., None, :, :] + lams[:, None, None] * _penalty(p)
    zero = lams == 0
    if np.any(zero):
        flat = G.reshape(-1, p, p)
        singular = np.linalg.matrix_rank(flat) < p
        if np.any(singular):
            jitter = np.zeros(flat.shape[0])
            jitter[singular] = SINGULAR_JITTER
            jitter = jitter.reshape(G.shape[:-2])
            M[..., zero, :, :] += jitter[..., None, None, None] * np.eye(p)
    rhs = np.broadcast_to(r[..., None, :], M.shape[:-1])
    return np.linalg.solve(M, rhs[..., None])[..., 0]


def _normalise(alpha):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
        raise ValidationError("weights must be a finite non-negative vector")
    total = alpha.sum()
    if total <= 0:
        raise ValidationError("empty effective training set: all weights are zero")
    if abs(total - 1.0) > 1e-12:
        alpha = alpha / total
    return alpha


def _align(alpha_row, subsets, T):
    alpha_row = np.asarray(alpha_row, dtype=float)
    if alpha_row.shape == (len(subsets),):
        return alpha_row
    if alpha_row.shape == (T,):
        return alpha_row[[s.task for s in subsets]]
    raise ValidationError(f"weight vector of length {alpha_row.size} matches neither k={len(subsets)} nor T={T}")


def train_weighted_ridge(coll, subsets, alpha_row, lam):
    """Ridge regression on the alpha-weighted union of labeled subsets.

    Minimises ``sum_i alpha_i mean_{(x,y) in subset i} (w.x + b - y)^2 + lam ||w||^2``
    with the bias left unpenalised.

    Parameters
    ----------
    coll : TaskCollection
    subsets : list of LabeledSubset
    alpha_row : array
        Either one weight per subset (same order) or a full length-T row.
    lam : float
        Ridge coefficient, >= 0.
    """
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")
    alpha = _normalise(_align(alpha_row, subsets, coll.T))
    p = coll.dim + 1
    G = np.zeros((p, p))
    r = np.zeros(p)
    for a, sub in zip(alpha, subsets):
        if a == 0:
            continue
        X, y = coll.labeled_points(sub)
        Z = _augment(X)
        c = a / len(sub)
        G += c * (Z.T @ Z)
        r += c * (Z.T @ y)
    theta = _solve_ridge(G, r, [lam])[0]
    return LinearModel.from_augmented(theta)


def _stratified_folds(y, folds, rng):
    """Fold id per position: shuffle, then deal each class round-robin."""
    perm = rng.permutation(len(y))
    ordered = np.concatenate([perm[y[perm] == -1], perm[y[perm] == 1]])
    fold = np.empty(len(y), dtype=int)
    fold[ordered] = np.arange(len(y)) % folds
    return fold


class WeightedRidgeCV:
    """Repeated k-fold selection of the ridge coefficient for weighted training.

    Folds are stratified by label within each labeled task and depend only on
    (cv.seed, repeat, task index). Sufficient statistics of every fold are
    computed once, so selecting lambda for a new weight vector costs a few
    batched 3x3 solves.
    """

    def __init__(self, coll, subsets, cv=CVConfig()):
        self.coll = coll
        self.subsets = list(subsets)
        self.cv = cv
        self.lams = np.asarray(cv.grid)
        for sub in self.subsets:
            if len(sub) < cv.folds:
                raise ValidationError(f"task {sub.task}: {len(sub)} labeled points cannot fill {cv.folds} folds")
        R, F = cv.repeats, cv.folds
        self.data = [(_augment(X), y) for X, y in (coll.labeled_points(s) for s in self.subsets)]
        p = coll.dim + 1
        k = len(self.subsets)
        self.Gtr = np.empty((R, F, k, p, p))
        self.rtr = np.empty((R, F, k, p))
        self.ntr = np.empty((R, F, k))
        self.val = [[None] * F for _ in range(R)]
        for rep in range(R):
            Zs, ys, owners = [[] for _ in range(F)], [[] for _ in range(F)], [[] for _ in range(F)]
            for j, (sub, (Z, y)) in enumerate(zip(self.subsets, self.data)):
                rng = _rng.stream(cv.seed, _rng.CV_FOLDS, rep, sub.task)
                fold = _stratified_folds(y, F, rng)
                for f in range(F):
                    tr = fold != f
                    Ztr = Z[tr]
                    self.Gtr[rep, f, j] = Ztr.T @ Ztr
                    self.rtr[rep, f, j] = Ztr.T @ y[tr]
                    self.ntr[rep, f, j] = tr.sum()
                    Zs[f].append(Z[~tr])
                    ys[f].append(y[~tr])
                    owners[f].append(np.full((~tr).sum(), j))
            for f in range(F):
                owner = np.concatenate(owners[f])
                nval = np.bincount(owner, minlength=k)
                self.val[rep][f] = (np.vstack(Zs[f]), np.concatenate(ys[f]), owner, nval)

    def errors(self, alpha_row):
        """Mean alpha-weighted 0/1 validation error for every lambda in the grid."""
        alpha = _normalise(_align(alpha_row, self.subsets, self.coll.T))
        active = np.flatnonzero(alpha > 0)
        a = alpha[active]
        c = a / self.ntr[:, :, active]
        G = np.einsum("rfj,rfjpq->rfpq", c, self.Gtr[:, :, active])
        r = np.einsum("rfj,rfjp->rfp", c, self.rtr[:, :, active])
        W = _solve_ridge(G, r, self.lams)
        total = np.zeros(len(self.lams))
        for rep in range(self.cv.repeats):
            for f in range(self.cv.folds):
                Z, y, owner, nval = self.val[rep][f]
                keep = alpha[owner] > 0
                pw = alpha[owner[keep]] / nval[owner[keep]]
                scores = Z[keep] @ W[rep, f].T
                wrong = np.where(scores > 0, 1, -1) != y[keep][:, None]
                total += pw @ wrong
        return total / (self.cv.repeats * self.cv.folds)

    def select(self, alpha_row):
        """Lambda with the lowest mean validation error; ties go to the smallest."""
        errs = np.round(self.errors(alpha_row), 12)
        return float(self.lams[int(np.argmin(errs))])

    def fit(self, alpha_row):
        lam = self.select(alpha_row)
        return train_weighted_ridge(self.coll, self.subsets, alpha_row, lam), lam


def cv_select_lambda(coll, subsets, alpha_row, cv=CVConfig()):
    return WeightedRidgeCV(coll, subsets, cv).select(alpha_row)


def train_transfer_models(coll, alpha, subsets, cv=CVConfig()):
    """Cross-validated weighted ridge model for every task.

    Tasks with identical weight rows share one fit.

    Returns
    -------
    models : list of LinearModel, length T
    lams : ndarray, selected ridge coefficient per task
    """
    by_task = {s.task: s for s in subsets}
    missing = [i for i in alpha.I if i not in by_task]
    if missing:
        raise ValidationError(f"no labeled subset for selected tasks {missing}")
    ordered = [by_task[i] for i in alpha.I]
    solver = WeightedRidgeCV(coll, ordered, cv)
    cache = {}
    models, lams = [], []
    for t in range(alpha.T):
        row = alpha.row(t)
        key = row.tobytes()
        if key not in cache:
            cache[key] = solver.fit(row)
        model, lam = cache[key]
        models.append(model)
        lams.append(lam)
    return models, np.array(lams)


def evaluate(models, coll):
    """Per-task 0/1 test errors and their average over tasks."""
    if len(models) != coll.T:
        raise ValidationError(f"{len(models)} models for {coll.T} tasks")
    errors = np.empty(coll.T)
    for t, model in enumerate(models):
        if coll.tests[t] is None:
            raise ValidationError(f"task {t} ({coll.ids[t]}) has no test set")
        errors[t] = model.error(*coll.tests[t])
    return errors, float(errors.mean())


# -- multi-task baseline ----------------------------------------------------

def multitask_objective(theta, U, blocks, gamma, C):
    """Value of the shared-plus-deviation least-squares objective.

    ``theta`` is the shared (w, b); ``U[j]`` the deviation (v_j, b_j) of the
    j-th labeled task; ``blocks`` the list of (Z_j, y_j) augmented data.
    """
    k = len(blocks)
    N = sum(len(y) for _, y in blocks)
    value = C * (theta[:-1] @ theta[:-1] + (U[:, :-1] ** 2).sum() / k)
    for (Z, y), u in zip(blocks, U):
        shared = Z @ theta - y
        value += (1 - gamma) / N * (shared @ shared)
        own = shared + Z @ u
        value += gamma / N * (own @ own)
    return float(value)


def train_multitask_baseline(coll, subsets, gamma, C, tol=1e-8, max_sweeps=100000, return_trace=False):
    """Shared predictor plus per-labeled-task deviations, fit by block coordinate descent.

    Minimises
    ``C (||w||^2 + (1/k) sum_t ||v_t||^2)
    + (1 - gamma)/(km) sum (w.x + b - y)^2
    + gamma/(km) sum ((w + v_t).x + b + b_t - y)^2``
    alternating exact solves for (w, b) and for all (v_t, b_t) jointly.

    Returns
    -------
    shared : LinearModel
        (w, b), used for every unlabeled task.
    deviations : dict of task index -> LinearModel
        (v_t, b_t); labeled task t predicts with (w + v_t, b + b_t).
    """
    if not subsets:
        raise ValidationError("multi-task baseline needs at least one labeled task")
    if not 0 <= gamma <= 1:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma}")
    if C <= 0:
        raise ValidationError(f"C must be positive, got {C}")
    blocks = [(_augment(X), y.astype(float)) for X, y in (coll.labeled_points(s) for s in subsets)]
    k = len(blocks)
    N = sum(len(y) for _, y in blocks)
    p = coll.dim + 1
    R = _penalty(p)
    Gs = np.stack([Z.T @ Z for Z, _ in blocks])
    rs = np.stack([Z.T @ y for Z, y in blocks])
    shared_lhs = C * R + Gs.sum(axis=0) / N
    dev_lhs = (C / k) * R + (gamma / N) * Gs
    theta = np.zeros(p)
    U = np.zeros((k, p))
    value = multitask_objective(theta, U, blocks, gamma, C)
    trace = [value]
    for _ in range(max_sweeps):
        theta = np.linalg.solve(shared_lhs, (rs.sum(axis=0) - gamma * np.einsum("jpq,jq->p", Gs, U)) / N)
        if gamma > 0:
            rhs = (gamma / N) * (rs - Gs @ theta)
            U = np.linalg.solve(dev_lhs, rhs[..., None])[..., 0]
        new = multitask_objective(theta, U, blocks, gamma, C)
        trace.append(new)
        done = value - new <= tol * max(abs(value), 1e-300)
        value = new
        if done:
            break
    shared = LinearModel.from_augmented(theta)
    deviations = {s.task: LinearModel.from_augmented(u) for s, u in zip(subsets, U)}
    return (shared, deviations, trace) if return_trace else (shared, deviations)


def multitask_models(shared, deviations, T):
    """Per-task predictors: shared model, plus the deviation on labeled tasks."""
    models = []
    for t in range(T):
        dev = deviations.get(t)
        models.append(shared if dev is None else LinearModel(shared.w + dev.w, shared.b + dev.b))
    return models


def train_fully_labeled_reference(coll, labels_per_task, cv=CVConfig(), seed=0):
    """Independent cross-validated ridge per task from its own labels.

    ``labels_per_task = m`` gives the fully labeled reference,
    ``m k / T`` the partially labeled one.

    Returns
    -------
    models : list of LinearModel
    lams : ndarray
    """
    labels_per_task = int(labels_per_task)
    if labels_per_task < cv.folds:
        raise ValidationError(f"{labels_per_task} labels per task cannot fill {cv.folds} CV folds")
    subsets = draw_labeled_subsets(coll, range(coll.T), seed, size=labels_per_task)
    models, lams = [], []
    for sub in subsets:
        model, lam = WeightedRidgeCV(coll, [sub], cv).fit(np.ones(1))
        models.append(model)
        lams.append(lam)
    return models, np.array(lams)


# -- persistence ------------------------------------------------------------

def save_models(models, path, ids=None):
    path = Path(path)
    ids = ids if ids is not None else [str(t) for t in range(len(models))]
    lines = [",".join([str(tid), repr(m.b)] + [repr(float(v)) for v in m.w]) for tid, m in zip(ids, models)]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_models(path, dim=None):
    """Read a model file; returns (ids, models)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    ids, models = [], []
    for row_no, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) < 3 or (dim is not None and len(cells) != dim + 2):
            raise FormatError(path, f"expected id, b and {dim if dim is not None else 'dim'} weights", row_no)
        try:
            values = [float(c) for c in cells[1:]]
        except ValueError:
            raise FormatError(path, "non-numeric parameter", row_no) from None
        ids.append(cells[0].strip())
        models.append(LinearModel(values[1:], values[0]))
    return ids, models
