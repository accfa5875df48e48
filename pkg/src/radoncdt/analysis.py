"""Linear analysis of flattened image or transform vectors.

PCA with explicit rank pruning, penalized LDA for visualization, a primal
linear SVM and stratified k-fold cross-validation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError
from .gridio import _atomic_write

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class LabeledDataset:
    """Rows of ``vectors`` with integer ``labels``; ``space`` names their origin."""

    vectors: np.ndarray
    labels: np.ndarray
    space: str = "image"

    def __post_init__(self):
        x = np.asarray(self.vectors, dtype=float)
        y = np.asarray(self.labels)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise DomainError("vectors must be (n, d) with one label per row")
        if not np.all(np.isfinite(x)):
            raise DomainError("vectors contain non-finite values")
        if y.size and (not np.issubdtype(y.dtype, np.integer) or y.min() < 0):
            raise DomainError("labels must be nonnegative integers")
        object.__setattr__(self, "vectors", x)
        object.__setattr__(self, "labels", y.astype(np.int64))


@dataclass(frozen=True)
class PCA:
    components: np.ndarray  # (d, r), orthonormal columns
    eigenvalues: np.ndarray  # (r,), nonincreasing
    mean: np.ndarray  # (d,)

    @property
    def rank(self) -> int:
        return self.components.shape[1]

    def transform(self, data) -> np.ndarray:
        return (np.asarray(data, dtype=float) - self.mean) @ self.components


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float

    def decision(self, vectors) -> np.ndarray:
        x = np.asarray(vectors, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.weights.size:
            raise DomainError(f"expected vectors of dimension {self.weights.size}, got shape {x.shape}")
        return x @ self.weights + self.bias


@dataclass(frozen=True)
class CVResult:
    mean: float
    std: float
    fold_accuracies: np.ndarray


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every column made positive
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def pca_fit(data) -> PCA:
    """Principal axes of ``data`` (rows are samples), zero-variance axes dropped.

    Eigenvalues below ``1e-10`` times the largest are treated as zero.  The
    sample covariance uses ``n - 1``.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DomainError("pca_fit needs at least two samples")
    mean = x.mean(axis=0)
    xc = x - mean
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    eig = s * s / (x.shape[0] - 1)
    keep = eig > RANK_RTOL * eig[0] if eig.size and eig[0] > 0 else np.zeros(eig.size, dtype=bool)
    return PCA(_fix_signs(vt[keep].T), eig[keep], mean)


def cpv_curve(eigenvalues) -> np.ndarray:
    """Cumulative fraction of variance captured by the leading components."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam < 0):
        raise DomainError("eigenvalues must be a non-empty nonnegative 1D array")
    total = lam.sum()
    if not total > 0:
        raise DomainError("all eigenvalues are zero")
    out = np.cumsum(lam) / total
    out = np.maximum.accumulate(np.minimum(out, 1.0))
    out[-1] = 1.0
    return out


def components_for(eigenvalues, fraction: float = 0.95) -> int:
    """Smallest number of components whose CPV reaches ``fraction``."""
    return int(np.searchsorted(cpv_curve(eigenvalues), fraction) + 1)


def _classes(labels, min_count: int):
    y = np.asarray(labels)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise DomainError("at least two classes are required")
    if counts.min() < min_count:
        raise DomainError(f"every class needs at least {min_count} samples")
    return y, classes


def plda_fit(data, labels, lam: float = 1.0) -> np.ndarray:
    """Penalized LDA directions, ``(d, C - 1)``.

    Solves ``S_b v = mu (S_w + lam * tr(S_w) / d * I) v`` and keeps the
    ``C - 1`` leading eigenvectors, scaled to unit norm with their
    largest-magnitude entry positive.  Run it on PCA-reduced data so that
    ``S_w`` is well conditioned for small ``lam``.
    """
    x = np.asarray(data, dtype=float)
    y, classes = _classes(labels, 2)
    if lam < 0:
        raise DomainError("lam must be nonnegative")
    d = x.shape[1]
    mu = x.mean(axis=0)
    sw = np.zeros((d, d))
    sb = np.zeros((d, d))
    for c in classes:
        xc = x[y == c]
        mc = xc.mean(axis=0)
        dev = xc - mc
        sw += dev.T @ dev
        sb += len(xc) * np.outer(mc - mu, mc - mu)
    reg = sw + lam * np.trace(sw) / d * np.eye(d)
    try:
        vals, vecs = linalg.eigh(sb, reg)
    except linalg.LinAlgError as exc:
        raise DomainError("within-class scatter is singular; raise lam or reduce dimension") from exc
    order = np.argsort(vals)[::-1][: classes.size - 1]
    v = vecs[:, order]
    v = v / np.linalg.norm(v, axis=0)
    return _fix_signs(v)


def discriminant_projection(data, labels, lam: float = 1.0) -> np.ndarray:
    """Two display coordinates per sample: pLDA axis and the leading residual principal axis.

    Data are first reduced by :func:`pca_fit`; for two classes the second
    coordinate is the top principal direction orthogonal to the
    discriminant.
    """
    pca = pca_fit(data)
    z = pca.transform(data)
    v = plda_fit(z, labels, lam)[:, :1]
    first = z @ v
    resid = z - first @ v.T
    rest = pca_fit(resid) if resid.shape[1] > 1 else None
    if rest is None or rest.rank == 0:
        second = np.zeros_like(first)
    else:
        second = rest.transform(resid)[:, :1]
    return np.hstack([first, second])


def svm_train(data, labels, C: float = 10.0, epochs: int = 200, seed: int = 0) -> LinearModel:
    """Linear soft-margin SVM by primal stochastic sub-gradient descent.

    Minimizes ``lam/2 |w|^2 + mean(hinge)`` with ``lam = 1 / (C n)`` over
    ``epochs`` seeded passes, step ``1 / (lam * step_index)``.  Inputs are
    rescaled to unit maximum norm and the bias is learned as an extra
    weight on a constant feature; the returned model is in input units.
    """
    x = np.asarray(data, dtype=float)
    y, classes = _classes(labels, 1)
    if not set(classes.tolist()) <= {0, 1}:
        raise DomainError("svm labels must be 0 or 1")
    if not C > 0 or epochs < 1:
        raise DomainError("C must be positive and epochs at least 1")
    n, d = x.shape
    scale = np.sqrt((x * x).sum(axis=1)).max()
    scale = scale if scale > 0 else 1.0
    xa = np.hstack([x / scale, np.ones((n, 1))])
    ys = np.where(y == 1, 1.0, -1.0)
    lam = 1.0 / (C * n)
    rng = np.random.default_rng(seed)
    w = np.zeros(d + 1)
    step = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            step += 1
            eta = 1.0 / (lam * step)
            margin = ys[i] * (xa[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * ys[i]) * xa[i]
    return LinearModel(w[:d] / scale, float(w[d]))


def svm_predict(model: LinearModel, vectors) -> np.ndarray:
    """Labels in ``{0, 1}``; a score of exactly zero counts as 1."""
    return (model.decision(vectors) >= 0).astype(np.int64)


def accuracy(model: LinearModel, vectors, labels) -> float:
    return float(np.mean(svm_predict(model, vectors) == np.asarray(labels)))


def stratified_folds(labels, folds: int, seed: int) -> np.ndarray:
    """Fold index per sample: each class is shuffled and dealt round-robin."""
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    out = np.empty(y.size, dtype=np.int64)
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        out[idx] = np.arange(idx.size) % folds
    return out


def fit_pipeline(train_x, train_y, C: float = 10.0, epochs: int = 200, seed: int = 0):
    """PCA pruning followed by an SVM in the reduced coordinates."""
    pca = pca_fit(train_x)
    model = svm_train(pca.transform(train_x), train_y, C, epochs, seed)
    return pca, model


def cross_validate(data, labels, folds: int = 10, seed: int = 0, C: float = 10.0, epochs: int = 200) -> CVResult:
    """Stratified k-fold accuracy of the PCA + linear SVM pipeline.

    PCA is refit on every training split and the test split projected onto
    it.
    """
    x = np.asarray(data, dtype=float)
    if folds < 2:
        raise DomainError("folds must be at least 2")
    y, _ = _classes(labels, folds)
    assign = stratified_folds(y, folds, seed)
    acc = np.empty(folds)
    for k in range(folds):
        test = assign == k
        pca, model = fit_pipeline(x[~test], y[~test], C, epochs, seed)
        acc[k] = accuracy(model, pca.transform(x[test]), y[test])
    return CVResult(float(np.mean(acc)), float(np.std(acc)), acc)


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode()


def write_projections_csv(path, panels: dict, labels) -> None:
    """One row per sample and space: ``space, plda_1, pc_residual_1, label``."""
    rows = [
        (space, f"{a:.10g}", f"{b:.10g}", int(c))
        for space, coords in panels.items()
        for (a, b), c in zip(coords, labels)
    ]
    _atomic_write(path, _csv_bytes(["space", "plda_1", "pc_residual_1", "label"], rows))


def write_cv_csv(path, results: dict) -> None:
    """Per-fold accuracies: ``space, fold, accuracy``."""
    rows = [
        (space, k, f"{a:.10g}")
        for space, res in results.items()
        for k, a in enumerate(res.fold_accuracies)
    ]
    _atomic_write(path, _csv_bytes(["space", "fold", "accuracy"], rows))


def write_cpv_csv(path, curves: dict) -> None:
    """``space, components, cpv`` for every prefix of every curve."""
    rows = [(space, k + 1, f"{v:.10g}") for space, cpv in curves.items() for k, v in enumerate(cpv)]
    _atomic_write(path, _csv_bytes(["space", "components", "cpv"], rows))


def write_results_csv(path, results: dict) -> None:
    rows = [(space, f"{r.mean:.10g}", f"{r.std:.10g}") for space, r in results.items()]
    _atomic_write(path, _csv_bytes(["space", "mean_accuracy", "std"], rows))
