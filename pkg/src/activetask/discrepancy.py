"""Empirical discrepancy between unlabeled task samples.

The production estimator fits a least-squares linear separator between the
two samples and maps its training error eps to ``clip(1 - 2 eps, 0, 1)``.
A brute-force grid search over pairs of 2-D halfplanes is kept as a test
oracle for the maximal disagreement difference.
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import FormatError, MissingFileError, ValidationError

__all__ = [
    "DiscrepancyMatrix",
    "HypothesisSpec",
    "estimate_discrepancy",
    "discrepancy_bruteforce",
    "build_matrix",
    "save_matrix",
    "load_matrix",
]

ESTIMATOR_ID = "sep-sq"
GRAM_JITTER = 1e-10


@dataclass(frozen=True)
class HypothesisSpec:
    """Linear classifiers with bias on R^dim; VC dimension dim + 1."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")

    @property
    def vc_dim(self):
        return self.dim + 1


@dataclass(frozen=True)
class DiscrepancyMatrix:
    values: np.ndarray
    n: int = 0
    seed: int = 0
    estimator: str = ESTIMATOR_ID
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        D = np.array(self.values, dtype=float)
        _check_matrix(D)
        D.setflags(write=False)
        object.__setattr__(self, "values", D)

    @property
    def T(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DiscrepancyMatrix):
            return NotImplemented
        return (self.n, self.seed, self.estimator) == (other.n, other.seed, other.estimator) and \
            np.array_equal(self.values, other.values)


def _check_matrix(D, where="discrepancy matrix"):
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise ValidationError(f"{where}: expected a non-empty square matrix, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValidationError(f"{where}: non-finite entries")
    if np.any(D < 0) or np.any(D > 1):
        t, i = np.argwhere((D < 0) | (D > 1))[0]
        raise ValidationError(f"{where}: entry ({t}, {i}) = {D[t, i]!r} outside [0, 1]")
    if np.any(np.diag(D) != 0):
        raise ValidationError(f"{where}: non-zero diagonal")
    if not np.array_equal(D, D.T):
        t, i = np.argwhere(D != D.T)[0]
        raise ValidationError(f"{where}: asymmetric at ({t}, {i}): {D[t, i]!r} != {D[i, t]!r}")


def _augment(X):
    return np.concatenate([X, np.ones(X.shape[:-1] + (1,))], axis=-1)


def _check_pair(S_t, S_i):
    S_t = np.asarray(S_t, dtype=float)
    S_i = np.asarray(S_i, dtype=float)
    if S_t.ndim != 2 or S_i.ndim != 2:
        raise ValidationError("samples must be 2-D arrays (n, dim)")
    if S_t.shape[0] == 0 or S_i.shape[0] == 0:
        raise ValidationError("empty sample")
    if S_t.shape[1] != S_i.shape[1]:
        raise ValidationError(f"dimension mismatch: {S_t.shape[1]} vs {S_i.shape[1]}")
    if S_t.shape[0] != S_i.shape[0]:
        raise ValidationError(f"row count mismatch: {S_t.shape[0]} vs {S_i.shape[0]}")
    return S_t, S_i


def _separation_disc(Z_t, Z_i, G_t, G_i, s_t, s_i):
    """Vectorised core: Z_t (n, p); Z_i (P, n, p); G_* Gram matrices; s_* column sums."""
    p = Z_t.shape[-1]
    G = G_t + G_i + GRAM_JITTER * np.eye(p)
    # S_t labeled +1, S_i labeled -1: Z^T y = s_t - s_i
    w = np.linalg.solve(G, (s_t - s_i)[..., None])[..., 0]
    pos = Z_t @ w.T
    neg = np.einsum("knp,kp->kn", Z_i, w)
    errors = np.count_nonzero(pos <= 0, axis=0) + np.count_nonzero(neg > 0, axis=1)
    eps = errors / (2 * Z_t.shape[0])
    return np.clip(1.0 - 2.0 * eps, 0.0, 1.0)


def estimate_discrepancy(S_t, S_i, seed=0):
    """Separation-classifier estimate of disc(S_t, S_i) in [0, 1].

    ``seed`` is accepted for interface uniformity; the least-squares fit is
    deterministic.
    """
    S_t, S_i = _check_pair(S_t, S_i)
    Z_t, Z_i = _augment(S_t), _augment(S_i)
    value = _separation_disc(Z_t, Z_i[None], Z_t.T @ Z_t, (Z_i.T @ Z_i)[None],
                             Z_t.sum(axis=0), Z_i.sum(axis=0)[None])
    return float(value[0])


def _halfplanes(points, angle_grid, bias_grid):
    angles = np.arange(angle_grid) * (2 * np.pi / angle_grid)
    U = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    proj = points @ U.T
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    pad = 1e-9 + 1e-6 * (hi - lo)
    # offsets span the projected data range, extremes give the two constant rules
    fr = np.linspace(0.0, 1.0, bias_grid)
    offsets = (lo - pad)[:, None] + fr[None, :] * ((hi - lo) + 2 * pad)[:, None]
    return U, offsets


def discrepancy_bruteforce(S_t, S_i, angle_grid=64, bias_grid=32, extra_pairs=()):
    """Grid approximation of max_{h,h'} |er_{S_t}(h,h') - er_{S_i}(h,h')| in 2-D.

    Hypotheses are halfplanes ``sign(u_theta . x - c)`` on ``angle_grid``
    directions and ``bias_grid`` offsets spanning the pooled data. Any
    ``extra_pairs`` of explicit ``((w, b), (w', b'))`` hypotheses are
    included in the maximisation.
    """
    S_t, S_i = np.asarray(S_t, dtype=float), np.asarray(S_i, dtype=float)
    if S_t.ndim != 2 or S_i.ndim != 2 or S_t.shape[1] != 2 or S_i.shape[1] != 2:
        raise ValidationError("brute-force oracle is defined for 2-D samples only")
    if len(S_t) == 0 or len(S_i) == 0:
        raise ValidationError("empty sample")
    if angle_grid < 1 or bias_grid < 2:
        raise ValidationError("need angle_grid >= 1 and bias_grid >= 2")
    U, offsets = _halfplanes(np.vstack([S_t, S_i]), angle_grid, bias_grid)

    def predictions(S):
        proj = S @ U.T  # (n, A)
        return (proj[:, :, None] > offsets[None, :, :]).reshape(len(S), -1).astype(float)

    def disagreement(P):
        n = P.shape[0]
        return (P.T @ (1.0 - P) + (1.0 - P).T @ P) / n

    best = float(np.abs(disagreement(predictions(S_t)) - disagreement(predictions(S_i))).max())
    for (w, b), (w2, b2) in extra_pairs:
        rates = [np.mean((S @ np.asarray(w) + b > 0) != (S @ np.asarray(w2) + b2 > 0)) for S in (S_t, S_i)]
        best = max(best, abs(rates[0] - rates[1]))
    return best


def build_matrix(coll, seed=0, block=64):
    """All pairwise separation-classifier discrepancies of a TaskCollection.

    Each unordered pair is estimated exactly once and mirrored, so the result
    is symmetric by construction. Pairs are processed in vectorised blocks;
    the estimate is deterministic, hence independent of blocking.
    """
    X = coll.samples if hasattr(coll, "samples") else np.asarray(coll, dtype=float)
    T = X.shape[0]
    D = np.zeros((T, T))
    if T > 1:
        Z = _augment(X)
        G = np.einsum("tnp,tnq->tpq", Z, Z)
        s = Z.sum(axis=1)
        for t in range(T - 1):
            for start in range(t + 1, T, block):
                idx = np.arange(start, min(start + block, T))
                try:
                    D[t, idx] = _separation_disc(Z[t], Z[idx], G[t], G[idx], s[t], s[idx])
                except np.linalg.LinAlgError as exc:
                    raise ValidationError(f"discrepancy for task {t} vs tasks {idx[0]}..{idx[-1]} failed: {exc}") from None
        D = np.triu(D, 1)
        D = D + D.T
    return DiscrepancyMatrix(D, n=X.shape[1], seed=int(seed))


def save_matrix(mat, path):
    path = Path(path)
    D = mat.values
    lines = [f"T={mat.T},n={mat.n},seed={mat.seed},estimator={mat.estimator}"]
    lines += [",".join(repr(float(v)) for v in row) for row in D]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_matrix(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise FormatError(path, "empty file")
    header = {}
    try:
        for part in lines[0].split(","):
            key, value = part.split("=", 1)
            header[key.strip()] = value.strip()
        T, n, seed = int(header["T"]), int(header["n"]), int(header["seed"])
        estimator = header["estimator"]
    except (KeyError, ValueError):
        raise FormatError(path, f"malformed header {lines[0]!r}", 1) from None
    if len(lines) - 1 != T:
        raise FormatError(path, f"header declares T={T} but file has {len(lines) - 1} rows")
    rows = []
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != T:
            raise FormatError(path, f"expected {T} columns, found {len(cells)}", row_no)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise FormatError(path, "non-numeric entry", row_no) from None
    try:
        return DiscrepancyMatrix(np.array(rows), n=n, seed=seed, estimator=estimator)
    except ValidationError as exc:
        raise FormatError(path, str(exc)) from None
