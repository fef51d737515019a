"""Computable terms of the multi-task generalization bound."""
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .exceptions import FormatError, MissingFileError, MissingLabelsError, ValidationError
from .selection import mixed_norm_12, mixed_norm_21

__all__ = [
    "BoundConfig",
    "BoundReport",
    "coefficient_A",
    "coefficient_B",
    "coefficient_C",
    "coefficient_D",
    "complexity_terms",
    "discrepancy_correction",
    "bound_report",
    "lambda_diagnostic",
    "save_report",
    "load_report",
]


def _log(x, what):
    if not x > 0:
        raise ValidationError(f"logarithm of non-positive argument in {what}: {x!r}")
    return math.log(x)


def _sqrt(x, what):
    if x < 0:
        raise ValidationError(f"negative radicand in {what}: {x!r} (check delta and k m / d)")
    return math.sqrt(x)


def coefficient_A(d, k, m):
    """sqrt(2 d log(e k m / d) / m)"""
    return _sqrt(2 * d * _log(math.e * k * m / d, "A") / m, "A")


def coefficient_B(m, delta=0.05):
    """sqrt(log(4 / delta) / (2 m))"""
    return _sqrt(_log(4 / delta, "B") / (2 * m), "B")


def coefficient_C(d, n, T, delta=0.05):
    log_terms = _log(T, "C") + d * _log(math.e * n * T / d, "C")
    return _sqrt(8 * log_terms / n, "C") + _sqrt(2 / n * _log(4 / delta, "C"), "C")


def coefficient_D(d, n, T, delta=0.05):
    return 2 * _sqrt((2 * d * _log(2 * n, "D") + 2 * _log(T, "D") + _log(4 / delta, "D")) / n, "D")


def discrepancy_correction(d, n, delta=0.05):
    """Deviation allowed between a sample discrepancy and the population one."""
    return 2 * _sqrt((2 * d * _log(2 * n, "correction") + _log(2 / delta, "correction")) / n, "correction")


@dataclass(frozen=True)
class BoundConfig:
    d: int
    k: int
    m: int
    n: int
    T: int
    delta: float = 0.05

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError(f"VC dimension must be >= 1, got {self.d}")
        if not 0 < self.delta < 1:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if not 1 <= self.m <= self.n:
            raise ValidationError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if not 1 <= self.k <= self.T:
            raise ValidationError(f"need 1 <= k <= T, got k={self.k}, T={self.T}")


def complexity_terms(cfg):
    """(A, B, C, D) for a BoundConfig."""
    return (
        coefficient_A(cfg.d, cfg.k, cfg.m),
        coefficient_B(cfg.m, cfg.delta),
        coefficient_C(cfg.d, cfg.n, cfg.T, cfg.delta),
        coefficient_D(cfg.d, cfg.n, cfg.T, cfg.delta),
    )


@dataclass(frozen=True)
class BoundReport:
    A: float
    B: float
    C: float
    D: float
    norm21: float
    norm12: float
    weighted_disc: float
    weighted_train_error: float
    total_computable: float
    disc_correction: float
    lambda_estimate: float = None

    @classmethod
    def assemble(cls, A, B, C, D, norm21, norm12, weighted_disc, weighted_train_error, T,
                 disc_correction, lambda_estimate=None):
        total = weighted_train_error + weighted_disc + A / T * norm21 + B / T * norm12 + C + D
        return cls(A, B, C, D, norm21, norm12, weighted_disc, weighted_train_error, total,
                   disc_correction, lambda_estimate)


def bound_report(coll, D_mat, alpha, models, subsets, cfg, lambda_estimate=None):
    """Evaluate every computable right-hand-side term for one configuration.

    The lambda terms need labels of unlabeled tasks and are never part of
    ``total_computable``; pass a diagnostic value as ``lambda_estimate`` to
    have it recorded alongside.
    """
    a = alpha.values
    Dv = D_mat.values if hasattr(D_mat, "values") else np.asarray(D_mat, dtype=float)
    T = a.shape[0]
    if Dv.shape != a.shape or len(models) != T or T != cfg.T:
        raise ValidationError(f"shape mismatch: alpha {a.shape}, D {Dv.shape}, {len(models)} models, cfg.T={cfg.T}")
    if alpha.k != cfg.k:
        raise ValidationError(f"weights use k={alpha.k} labeled tasks, cfg.k={cfg.k}")
    by_task = {s.task: s for s in subsets}
    labeled = {}
    for i in alpha.I:
        if i not in by_task:
            raise MissingLabelsError(f"no labeled subset for selected task {i}")
        labeled[i] = coll.labeled_points(by_task[i])
    train = 0.0
    for t in range(T):
        for i in alpha.I:
            if a[t, i] > 0:
                train += a[t, i] * models[t].error(*labeled[i])
    train /= T
    A, B, C, D = complexity_terms(cfg)
    return BoundReport.assemble(
        A, B, C, D,
        norm21=mixed_norm_21(a),
        norm12=mixed_norm_12(a),
        weighted_disc=float((a * Dv).sum() / T),
        weighted_train_error=float(train),
        T=T,
        disc_correction=discrepancy_correction(cfg.d, cfg.n, cfg.delta),
        lambda_estimate=lambda_estimate,
    )


def lambda_diagnostic(coll, t, i):
    """Upper estimate of min_h (er_t(h) + er_i(h)) for two fully labeled tasks.

    A single least-squares linear model is fit on the union of both tasks'
    labeled samples; the returned value is the sum of its 0/1 test errors on
    the two tasks.
    """
    from .learners import _augment, LinearModel

    for task in (t, i):
        if not coll.has_labels(task):
            raise MissingLabelsError(f"task {task} has no labels")
        if not coll.has_test(task):
            raise MissingLabelsError(f"task {task} has no labeled test set")
    X = np.vstack([coll.samples[t], coll.samples[i]])
    y = np.concatenate([coll.labels[t], coll.labels[i]]).astype(float)
    Z = _augment(X)
    theta = np.linalg.lstsq(Z, y, rcond=None)[0]
    h = LinearModel.from_augmented(theta)
    return h.error(*coll.tests[t]) + h.error(*coll.tests[i])


def save_report(report, path):
    lines = []
    for f in fields(report):
        value = getattr(report, f.name)
        if value is None:
            continue
        lines.append(f"{f.name}={float(value)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def load_report(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    values = {}
    for row_no, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(path, f"expected key=value, got {line!r}", row_no)
        try:
            values[key.strip()] = float(value)
        except ValueError:
            raise FormatError(path, f"non-numeric value for {key}", row_no) from None
    try:
        return BoundReport(**values)
    except TypeError as exc:
        raise FormatError(path, str(exc)) from None
