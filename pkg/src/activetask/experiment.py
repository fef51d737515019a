"""End-to-end runs of the labeled/unlabeled multi-task methods and seed sweeps."""
import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bound import BoundConfig, bound_report
from .discrepancy import build_matrix, load_matrix, save_matrix
from .exceptions import ValidationError
from .learners import (
    CVConfig,
    DEFAULT_LAMBDA_GRID,
    _augment,
    evaluate,
    multitask_models,
    train_fully_labeled_reference,
    train_multitask_baseline,
    train_transfer_models,
)
from .selection import (
    ObjectiveConfig,
    assign_nearest_source,
    optimize_weights,
    random_labeled_set,
    select_active_grasp,
    select_active_kmedoids,
)
from .tasks import draw_labeled_subsets, generate_synthetic, load_collection

log = logging.getLogger(__name__)

METHODS = ("da", "active-da", "da-ss", "active-da-ss", "multitask", "fully-labeled", "partial-labeled")
TRANSFER_METHODS = METHODS[:4]
GAMMAS = tuple(round(0.1 * g, 1) for g in range(11))
RESULT_FIELDS = ("method", "k", "seed", "mean_test_error", "std_test_error", "bound_total", "wall_seconds")


@dataclass
class ExperimentConfig:
    methods: list
    ks: list
    seeds: list
    output: str = "results"
    data: str = "synthetic"
    T: int = 200
    n: int = 1000
    m: int = 100
    n_test: int = 1000
    delta: float = 0.05
    cv_repeats: int = 5
    cv_folds: int = 5
    timing: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ValidationError("experiment needs at least one seed")
        if not self.methods or not self.ks:
            raise ValidationError("experiment needs at least one method and one k")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValidationError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if self.data == "synthetic":
            bad = [k for k in self.ks if not 1 <= k <= self.T]
            if bad:
                raise ValidationError(f"k values {bad} outside [1, T={self.T}]")

    def cv(self, seed):
        return CVConfig(DEFAULT_LAMBDA_GRID, self.cv_repeats, self.cv_folds, seed)


_INT_KEYS = {"T", "n", "m", "n_test", "cv_repeats", "cv_folds"}
_LIST_KEYS = {"method": "methods", "k": "ks", "seed": "seeds"}


def parse_config(text):
    """Flat ``key=value`` lines; ``method``, ``k`` and ``seed`` may repeat."""
    values = {"methods": [], "ks": [], "seeds": []}
    extra = {}
    for row_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValidationError(f"config line {row_no}: expected key=value, got {raw!r}")
        try:
            if key in _LIST_KEYS:
                values[_LIST_KEYS[key]].extend(
                    int(v) if key != "method" else v.strip() for v in value.split(",") if v.strip())
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key == "delta":
                values[key] = float(value)
            elif key == "timing":
                values[key] = value.lower() in ("1", "true", "yes", "on")
            elif key in ("output", "data"):
                values[key] = value
            else:
                extra[key] = value
        except ValueError:
            raise ValidationError(f"config line {row_no}: bad value for {key}: {value!r}") from None
    if extra:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(extra))}")
    return ExperimentConfig(**values)


def load_config(path):
    return parse_config(Path(path).read_text())


def _objective_config(coll, k, delta):
    return ObjectiveConfig.from_bound(coll.dim + 1, k, coll.m, delta)


def select_tasks(D, method, k, seed, objective):
    """Labeled set and transfer weights for one of the four transfer methods."""
    T = D.T
    if not 1 <= k <= T:
        raise ValidationError(f"k={k} outside [1, T={T}]")
    if method == "da":
        I = random_labeled_set(T, k, seed)
        return optimize_weights(D, I, objective)
    if method == "active-da":
        return select_active_grasp(D, k, objective, seed)[1]
    if method == "da-ss":
        return assign_nearest_source(D, random_labeled_set(T, k, seed))
    if method == "active-da-ss":
        return assign_nearest_source(D, select_active_kmedoids(D, k, seed)[0])
    raise ValidationError(f"{method!r} is not a transfer method")


@dataclass
class CellResult:
    method: str
    k: int
    seed: int
    errors: np.ndarray
    bound_total: float = math.nan
    wall_seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def mean(self):
        return float(np.mean(self.errors)) if self.errors is not None else math.nan

    @property
    def std(self):
        return float(np.std(self.errors)) if self.errors is not None else math.nan


def _multitask_cv_errors(blocks_tr, blocks_val, gamma, Cs):
    """Mean validation 0/1 error per C for one train/validation split.

    Uses the exact minimiser of the shared-plus-deviation objective obtained
    by eliminating the per-task blocks (Schur complement), which coincides
    with the block coordinate descent fixed point.
    """
    p = blocks_tr[0][0].shape[1]
    R = np.eye(p)
    R[-1, -1] = 0.0
    k = len(blocks_tr)
    N = sum(len(y) for _, y in blocks_tr)
    Gs = np.stack([Z.T @ Z for Z, _ in blocks_tr])
    rs = np.stack([Z.T @ y for Z, y in blocks_tr])
    errs = np.empty(len(Cs))
    for c_idx, C in enumerate(Cs):
        Hww = C * R + Gs.sum(axis=0) / N
        rw = rs.sum(axis=0) / N
        if gamma > 0:
            Hjj = (C / k) * R + (gamma / N) * Gs
            Hwj = (gamma / N) * Gs
            inv_hwj = np.linalg.solve(Hjj, Hwj)
            inv_rj = np.linalg.solve(Hjj, ((gamma / N) * rs)[..., None])[..., 0]
            S = Hww - np.einsum("jpq,jqr->pr", Hwj, inv_hwj)
            # at gamma = 1 the shared bias is unidentified; any minimiser gives the same theta + u
            theta = np.linalg.lstsq(S, rw - np.einsum("jpq,jq->p", Hwj, inv_rj), rcond=None)[0]
            U = inv_rj - np.einsum("jpq,q->jp", inv_hwj, theta)
        else:
            theta = np.linalg.solve(Hww, rw)
            U = np.zeros((k, p))
        wrong = total = 0
        for (Z, y), u in zip(blocks_val, U):
            pred = np.where(Z @ (theta + u) > 0, 1, -1)
            wrong += np.count_nonzero(pred != y)
            total += len(y)
        errs[c_idx] = wrong / total
    return errs


def multitask_select_C(coll, subsets, gamma, cv):
    """Repeated-fold choice of the multi-task regulariser C (positive grid values)."""
    from . import _rng
    from .learners import _stratified_folds

    Cs = np.array([c for c in cv.grid if c > 0])
    data = [(_augment(X), y.astype(float)) for X, y in (coll.labeled_points(s) for s in subsets)]
    total = np.zeros(len(Cs))
    for rep in range(cv.repeats):
        folds = [_stratified_folds(y.astype(int), cv.folds, _rng.stream(cv.seed, _rng.CV_FOLDS, rep, s.task))
                 for s, (_, y) in zip(subsets, data)]
        for f in range(cv.folds):
            tr = [(Z[fold != f], y[fold != f]) for (Z, y), fold in zip(data, folds)]
            va = [(Z[fold == f], y[fold == f]) for (Z, y), fold in zip(data, folds)]
            total += _multitask_cv_errors(tr, va, gamma, Cs)
    errs = np.round(total / (cv.repeats * cv.folds), 12)
    return float(Cs[int(np.argmin(errs))])


def run_cell(coll, D, method, k, seed, cv, delta=0.05, gammas=GAMMAS):
    """Run one (method, k, seed) configuration and return its CellResult."""
    start = time.perf_counter()
    bound_total = math.nan
    detail = {}
    if method in TRANSFER_METHODS:
        objective = _objective_config(coll, k, delta)
        alpha = select_tasks(D, method, k, seed, objective)
        subsets = draw_labeled_subsets(coll, alpha.I, seed)
        models, lams = train_transfer_models(coll, alpha, subsets, cv)
        errors, _ = evaluate(models, coll)
        report = bound_report(coll, D, alpha, models, subsets,
                              BoundConfig(coll.dim + 1, k, coll.m, coll.n, coll.T, delta))
        bound_total = report.total_computable
        detail.update(I=alpha.I, lams=lams, report=report)
    elif method == "multitask":
        I = random_labeled_set(coll.T, k, seed)
        subsets = draw_labeled_subsets(coll, I, seed)
        per_gamma = {}
        for gamma in gammas:
            C = multitask_select_C(coll, subsets, gamma, cv)
            shared, dev = train_multitask_baseline(coll, subsets, gamma, C, max_sweeps=10000)
            per_gamma[gamma] = evaluate(multitask_models(shared, dev, coll.T), coll)[0]
        detail["per_gamma"] = per_gamma
        errors = None
    elif method in ("fully-labeled", "partial-labeled"):
        labels = coll.m if method == "fully-labeled" else (coll.m * k) // coll.T
        models, lams = train_fully_labeled_reference(coll, labels, cv, seed)
        errors, _ = evaluate(models, coll)
        detail.update(lams=lams, labels_per_task=labels)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return CellResult(method, k, seed, errors, bound_total, time.perf_counter() - start, detail)


def _dataset(config, seed, cache_dir):
    """Collection and cached discrepancy matrix for one seed."""
    if config.data == "synthetic":
        coll = generate_synthetic(config.T, config.n, config.m, config.n_test, seed)
        cache = cache_dir / f"disc_seed{seed}.csv"
    else:
        coll = load_collection(config.data)
        cache = cache_dir / "disc.csv"
    D = None
    if cache.is_file():
        try:
            D = load_matrix(cache)
        except ValidationError:
            D = None
        if D is not None and (D.T != coll.T or D.n != coll.n):
            D = None
    if D is None:
        D = build_matrix(coll, seed if config.data == "synthetic" else 0)
        save_matrix(D, cache)
    return coll, D


def _fmt(x):
    return repr(float(x))


def run_experiment(config, progress=None):
    """Sweep every (method, k, seed) cell and write ``results.csv`` and ``results_summary.csv``.

    A failing cell is logged, recorded with NaN values and skipped.
    For ``multitask`` the gamma with the lowest seed-averaged test error is
    reported for each k (an optimistic model choice, as labeled in
    ``multitask_gamma.csv``).
    """
    out = Path(config.output)
    cache_dir = out / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    if config.data != "synthetic":
        T = load_collection(config.data).T
        bad = [k for k in config.ks if not 1 <= k <= T]
        if bad:
            raise ValidationError(f"k values {bad} outside [1, T={T}]")
    cells = {}
    for seed in config.seeds:
        coll, D = _dataset(config, seed, cache_dir)
        for method in config.methods:
            for k in config.ks:
                try:
                    cell = run_cell(coll, D, method, k, seed, config.cv(seed), config.delta)
                except (ValidationError, np.linalg.LinAlgError) as exc:
                    log.warning("cell method=%s k=%s seed=%s failed: %s", method, k, seed, exc)
                    cell = CellResult(method, k, seed, None, detail={"error": str(exc)})
                cells[method, k, seed] = cell
                if progress:
                    progress(cell)
    _resolve_multitask(config, cells, out)
    rows = []
    for method in config.methods:
        for k in config.ks:
            for seed in config.seeds:
                c = cells[method, k, seed]
                wall = c.wall_seconds if config.timing else 0.0
                rows.append([method, k, seed, _fmt(c.mean), _fmt(c.std), _fmt(c.bound_total), _fmt(wall)])
    _write_csv(out / "results.csv", RESULT_FIELDS, rows)
    summary = []
    for method in config.methods:
        for k in config.ks:
            means = np.array([cells[method, k, s].mean for s in config.seeds])
            means = means[np.isfinite(means)]
            mean = float(means.mean()) if means.size else math.nan
            stderr = float(means.std(ddof=1) / math.sqrt(means.size)) if means.size > 1 else math.nan
            summary.append([method, k, _fmt(mean), _fmt(stderr)])
    _write_csv(out / "results_summary.csv", ("method", "k", "mean", "stderr"), summary)
    return cells


def _resolve_multitask(config, cells, out):
    if "multitask" not in config.methods:
        return
    rows = []
    for k in config.ks:
        runs = [cells["multitask", k, s] for s in config.seeds]
        ok = [c for c in runs if "per_gamma" in c.detail]
        if not ok:
            continue
        avg = {g: float(np.mean([c.detail["per_gamma"][g].mean() for c in ok])) for g in GAMMAS}
        best = min(GAMMAS, key=lambda g: (avg[g], g))
        for g in GAMMAS:
            rows.append([k, g, _fmt(avg[g]), int(g == best)])
        for c in ok:
            c.errors = c.detail["per_gamma"][best]
            c.detail["gamma"] = best
    _write_csv(out / "multitask_gamma.csv", ("k", "gamma", "mean_test_error_over_seeds", "chosen_by_test_error"), rows)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())
