"""Affinity graphs and the unnormalized graph Laplacian.

Affinity matrices are stored as symmetric ``scipy.sparse.csr_matrix``
objects with an empty diagonal. A :class:`Laplacian` wraps such a matrix
together with its degree vector; it never materializes ``D - W`` unless
asked to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial.distance import cdist

from .errors import ConfigError, InputError

Neighbors = Union[int, Literal["dense"]]

# rows per block when computing pairwise distances
_BLOCK = 512
# above n*n*d of this size, distances go through a BLAS product instead of cdist
_EXACT_LIMIT = 2e8


@dataclass(frozen=True)
class Dataset:
    """Feature vectors, optionally with ground-truth cluster ids."""

    points: np.ndarray
    true_labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] < 1:
            raise InputError(f"points must be an (n >= 2, d >= 1) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points contain non-finite values")
        object.__setattr__(self, "points", pts)
        if self.true_labels is not None:
            lab = np.asarray(self.true_labels)
            if lab.shape != (pts.shape[0],):
                raise InputError(f"true_labels must have length {pts.shape[0]}, got shape {lab.shape}")
            if not np.issubdtype(lab.dtype, np.integer):
                if not np.all(lab == np.round(lab)):
                    raise InputError("true_labels must be integers")
            lab = lab.astype(np.int64)
            ids = np.unique(lab)
            if ids[0] != 0 or not np.array_equal(ids, np.arange(ids.size)):
                raise InputError("true_labels must form a contiguous range starting at 0")
            object.__setattr__(self, "true_labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def n_classes(self) -> int:
        if self.true_labels is None:
            raise InputError("dataset has no true_labels")
        return int(self.true_labels.max()) + 1


@dataclass(frozen=True)
class GraphConfig:
    """How to turn points into an affinity matrix.

    ``sigma=None`` selects the median heuristic (:func:`median_knn_sigma`)
    using ``heuristic_k`` neighbours. ``neighbors`` is either the ``k`` of a
    union-symmetrized kNN graph or ``"dense"``.
    """

    sigma: float | None = None
    neighbors: Neighbors = 10
    heuristic_k: int = 10
    self_loops: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.sigma is not None and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.neighbors != "dense":
            if isinstance(self.neighbors, bool) or not isinstance(self.neighbors, (int, np.integer)):
                raise ConfigError(f"neighbors must be a positive int or 'dense', got {self.neighbors!r}")
            if self.neighbors < 1:
                raise ConfigError(f"neighbors must be positive, got {self.neighbors}")
        if self.heuristic_k < 1:
            raise ConfigError("heuristic_k must be positive")


def _sq_dists(points: np.ndarray, rows: slice) -> np.ndarray:
    n, d = points.shape
    if n * n * d <= _EXACT_LIMIT:
        # per-pair differences: exactly symmetric and exact for equal points
        return cdist(points[rows], points, "sqeuclidean")
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[rows, None] - 2.0 * points[rows] @ points.T + sq[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def knn(points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbours of every point (self excluded).

    Returns ``(indices, sq_distances)``, both of shape ``(n, k)`` and sorted
    by distance. Ties are broken by the smaller index.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if k >= n:
        raise ConfigError(f"neighbors={k} must be smaller than n={n}")
    idx = np.empty((n, k), dtype=np.int64)
    dst = np.empty((n, k))
    for start in range(0, n, _BLOCK):
        rows = slice(start, min(start + _BLOCK, n))
        d2 = _sq_dists(points, rows)
        r = np.arange(rows.start, rows.stop)
        d2[r - start, r] = np.inf
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        pd = np.take_along_axis(d2, part, axis=1)
        # sort candidates by (distance, index) so equal distances keep the lower index
        order = np.take_along_axis(part, np.lexsort((part, pd), axis=1), axis=1)
        kth = np.take_along_axis(d2, order[:, -1:], axis=1)
        tied = np.flatnonzero((d2 <= kth).sum(axis=1) > k)
        if tied.size:
            # ties straddle the k-th place: the partition may have kept a higher index
            order[tied] = np.argsort(d2[tied], axis=1, kind="stable")[:, :k]
        idx[rows] = order
        dst[rows] = np.take_along_axis(d2, order, axis=1)
    return idx, dst


def median_knn_sigma(points: np.ndarray, k: int = 10) -> float:
    """Median of the Euclidean distances from each point to its k nearest neighbours."""
    points = np.asarray(points, dtype=float)
    k = min(k, points.shape[0] - 1)
    _, d2 = knn(points, k)
    sigma = float(np.median(np.sqrt(d2)))
    if sigma <= 0:
        # duplicated points; fall back to the mean so the kernel stays defined
        sigma = float(np.mean(np.sqrt(d2)))
    if sigma <= 0:
        raise InputError("all points coincide; cannot choose sigma")
    return sigma


def resolve_sigma(data: Dataset, config: GraphConfig) -> float:
    if config.sigma is not None:
        return float(config.sigma)
    return median_knn_sigma(data.points, config.heuristic_k)


def build_affinity(data: Dataset, config: GraphConfig) -> sparse.csr_matrix:
    """Gaussian affinity ``exp(-|x_i - x_j|^2 / (2 sigma^2))``.

    With ``neighbors=k`` an edge (i, j) is kept iff j is among the k nearest
    of i or i among the k nearest of j. The result is not guaranteed to be
    connected; see :func:`connected_components`.
    """
    if not isinstance(data, Dataset):
        data = Dataset(data)
    sigma = resolve_sigma(data, config)
    pts = data.points
    n = data.n
    scale = 1.0 / (2.0 * sigma * sigma)
    if config.neighbors == "dense":
        W = np.empty((n, n))
        for start in range(0, n, _BLOCK):
            rows = slice(start, min(start + _BLOCK, n))
            W[rows] = np.exp(-_sq_dists(pts, rows) * scale)
        np.fill_diagonal(W, 0.0)
        W = np.maximum(W, W.T)  # removes round-off asymmetry in the distance formula
        return sparse.csr_matrix(W)
    k = int(config.neighbors)
    if k >= n:
        raise ConfigError(f"neighbors={k} must be smaller than n={n}")
    idx, _ = knn(pts, k)
    rows = np.repeat(np.arange(n), k)
    cols = idx.ravel()
    # canonical (lo, hi) pairs so the union keeps one weight per edge
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    pairs = np.unique(lo * n + hi)
    lo, hi = pairs // n, pairs % n
    diff = pts[lo] - pts[hi]
    w = np.exp(-np.einsum("ij,ij->i", diff, diff) * scale)
    W = sparse.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
        shape=(n, n),
    ).tocsr()
    W.sort_indices()
    return W


def as_affinity(W) -> sparse.csr_matrix:
    """Coerce a dense or sparse square matrix to a csr affinity, checking symmetry."""
    W = sparse.csr_matrix(W, dtype=float)
    if W.shape[0] != W.shape[1]:
        raise InputError(f"affinity must be square, got {W.shape}")
    if W.nnz and not np.all(np.isfinite(W.data)):
        raise InputError("affinity has non-finite entries")
    if W.diagonal().any():
        W = W.tolil()
        W.setdiag(0.0)
        W = W.tocsr()
    W.eliminate_zeros()
    if (W != W.T).nnz:
        raise InputError("affinity must be exactly symmetric")
    W.sort_indices()
    return W


def degree_vector(W) -> np.ndarray:
    """Row sums ``D_ii = sum_j W_ij``."""
    return np.asarray(sparse.csr_matrix(W).sum(axis=1)).ravel()


@dataclass(frozen=True)
class Laplacian:
    """``L = D - W`` for a symmetric non-negative affinity ``W``."""

    affinity: sparse.csr_matrix
    degree: np.ndarray

    @property
    def n(self) -> int:
        return self.degree.shape[0]

    @property
    def matrix(self) -> sparse.csr_matrix:
        return (sparse.diags(self.degree) - self.affinity).tocsr()

    def toarray(self) -> np.ndarray:
        return np.diag(self.degree) - self.affinity.toarray()

    def __matmul__(self, f):
        return apply(self, f)

    def norm_inf(self) -> float:
        """Induced infinity norm, ``max_i 2 D_ii`` for a Laplacian."""
        return float(2.0 * self.degree.max()) if self.n else 0.0


def build_laplacian(W) -> Laplacian:
    W = as_affinity(W)
    if W.nnz and W.data.min() < 0:
        raise InputError("affinity entries must be non-negative before building a Laplacian")
    return Laplacian(W, degree_vector(W))


def _check_vec(L: Laplacian, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[0] != L.n:
        raise InputError(f"vector length {f.shape[0]} does not match graph size {L.n}")
    return f


def apply(L: Laplacian, f) -> np.ndarray:
    """``(Lf)_j = sum_i W_ij (f_j - f_i)``; also accepts an (n, p) block."""
    f = _check_vec(L, f)
    if f.ndim == 1:
        return L.degree * f - L.affinity @ f
    return L.degree[:, None] * f - L.affinity @ f


def dirichlet_energy(L: Laplacian, f) -> float:
    """Quadratic form ``f^T L f``.

    This equals ``1/2 * sum_{i,j} W_ij (f_i - f_j)^2`` summed over ordered
    pairs, i.e. the energy over unordered edges ``sum_{i<j} W_ij (f_i - f_j)^2``.
    The ordered double sum without the 1/2 is ``2 f^T L f``.
    """
    f = _check_vec(L, f)
    if f.ndim != 1:
        raise InputError("dirichlet_energy expects a vector")
    W = L.affinity.tocoo()
    # edge form is exactly non-negative, unlike D f.f - f.W f under round-off
    return float(0.5 * np.sum(W.data * (f[W.row] - f[W.col]) ** 2))


def connected_components(W) -> tuple[int, np.ndarray]:
    """Number of components and a component id per node (over nonzero edges)."""
    if isinstance(W, Laplacian):
        W = W.affinity
    W = sparse.csr_matrix(W)
    return csgraph.connected_components(W, directed=False)
