"""K-means and the NMI / ACC clustering scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray
    inertia: float
    restarts_used: int
    centers: np.ndarray
    inertia_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class MetricReport:
    nmi: float
    acc: float
    permutation: np.ndarray


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d2, 0.0)


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dist(X, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            i = rng.choice(n, p=closest / total)
        else:
            i = rng.integers(n)
        centers[c] = X[i]
        closest = np.minimum(closest, _sq_dist(X, centers[c : c + 1])[:, 0])
    return centers


def _lloyd(X, centers, max_iter, tol):
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dist(X, centers)
        new_labels = np.argmin(d2, axis=1)
        dist = d2[np.arange(X.shape[0]), new_labels]
        # an empty cluster takes the point farthest from its current center
        counts = np.bincount(new_labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            far = int(np.argmax(dist))
            new_labels[far] = c
            dist[far] = 0.0
            counts = np.bincount(new_labels, minlength=k)
        history.append(float(dist.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        new_centers = np.zeros_like(centers)
        np.add.at(new_centers, labels, X)
        new_centers /= counts[:, None]
        shift = np.abs(new_centers - centers).max()
        centers = new_centers
        if shift <= tol:
            d2 = _sq_dist(X, centers)
            labels = np.argmin(d2, axis=1)
            history.append(float(d2[np.arange(X.shape[0]), labels].sum()))
            break
    inertia = float(((X - centers[labels]) ** 2).sum())
    return labels, centers, inertia, history


def kmeans(
    points,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-12,
) -> ClusteringResult:
    """Lloyd's algorithm from k-means++ seeds; keeps the lowest-inertia restart.

    Each restart draws from its own generator spawned from ``seed``, so the
    result does not depend on evaluation order.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k must be in [1, n={n}], got {k}")
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, centers, inertia, hist = _lloyd(X, _kmeans_pp(X, k, rng), max_iter, tol)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia, hist)
    labels, centers, inertia, hist = best
    return ClusteringResult(labels.astype(np.int64), inertia, restarts, centers, tuple(hist))


def confusion_matrix(true_labels, predicted) -> np.ndarray:
    """Square count matrix, rows = true class, columns = predicted cluster (zero padded)."""
    t, p = _pair(true_labels, predicted)
    size = max(t.max(), p.max()) + 1
    C = np.zeros((size, size), dtype=np.int64)
    np.add.at(C, (t, p), 1)
    return C


def hungarian_match(confusion) -> tuple[np.ndarray, int]:
    """Permutation ``perm`` maximizing ``sum_j confusion[perm[j], j]``.

    ``perm[j]`` is the true class assigned to predicted cluster ``j``.
    Returns the permutation and the matched count.
    """
    C = np.asarray(confusion)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InputError(f"confusion matrix must be square, got shape {C.shape}")
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = np.empty(C.shape[0], dtype=np.int64)
    perm[cols] = rows
    return perm, int(C[perm, np.arange(C.shape[1])].sum())


def _pair(true_labels, predicted):
    t = np.asarray(true_labels).ravel()
    p = np.asarray(predicted).ravel()
    if t.shape != p.shape:
        raise InputError(f"label vectors differ in length: {t.size} vs {p.size}")
    if t.size == 0:
        raise InputError("empty label vectors")
    return _ids(t), _ids(p)


def _ids(x: np.ndarray) -> np.ndarray:
    # non-negative integer ids are kept so permutations refer to the caller's ids
    if np.issubdtype(x.dtype, np.integer) and x.min() >= 0:
        return x.astype(np.int64)
    return np.unique(x, return_inverse=True)[1].astype(np.int64)


def _entropy(counts: np.ndarray) -> float:
    q = counts[counts > 0] / counts.sum()
    return float(-(q * np.log(q)).sum())


def nmi(true_labels, predicted) -> float:
    """Mutual information over the larger of the two entropies.

    If both partitions are trivial (zero entropy) the score is 1; if only
    one of them is, the score is 0.
    """
    t, p = _pair(true_labels, predicted)
    n = t.size
    joint = np.zeros((t.max() + 1, p.max() + 1))
    np.add.at(joint, (t, p), 1.0)
    ht = _entropy(joint.sum(1))
    hp = _entropy(joint.sum(0))
    if ht == 0.0 or hp == 0.0:
        return 1.0 if ht == hp else 0.0
    pj = joint / n
    pt = pj.sum(1, keepdims=True)
    pp = pj.sum(0, keepdims=True)
    nz = pj > 0
    mi = float((pj[nz] * np.log(pj[nz] / (pt @ pp)[nz])).sum())
    return float(np.clip(mi / max(ht, hp), 0.0, 1.0))


def acc(true_labels, predicted) -> tuple[float, np.ndarray]:
    """Best-permutation agreement rate and the permutation used."""
    C = confusion_matrix(true_labels, predicted)
    perm, matched = hungarian_match(C)
    return matched / int(C.sum()), perm


def evaluate(true_labels, predicted) -> MetricReport:
    a, perm = acc(true_labels, predicted)
    return MetricReport(nmi(true_labels, predicted), a, perm)
