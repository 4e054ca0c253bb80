"""Label-aware affinities: the weighted nonlocal Laplacian and the SSL Laplacian.

All builders take the unsupervised affinity ``W`` and a :class:`LabeledSet`
and return a new symmetric csr matrix; ``W`` is never modified.

Summary of the entries produced for a pair (i, j), with ``a = alpha``:

============================  ==============  =====================
pair                          W_WNLL          W_SSL
============================  ==============  =====================
both unlabeled                2 W_ij          2 W_ij
one labeled, one unlabeled    (1 + mu) W_ij   (2 + a) W_ij
labeled, same class           2 W_ij          2 W_ij + a max(W)
labeled, different classes    2 W_ij          0
============================  ==============  =====================
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ConfigError, InputError, InvariantError
from .graph import Laplacian, as_affinity, build_laplacian

VARIANTS = ("W1", "W2", "W3")
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class LabeledSet:
    """Labeled node indices grouped by class: ``subsets[k]`` holds S_k."""

    subsets: tuple[np.ndarray, ...]
    n: int

    def __post_init__(self):
        subs = tuple(np.unique(np.asarray(s, dtype=np.int64).ravel()) for s in self.subsets)
        if len(subs) < 1:
            raise InputError("a labeled set needs at least one class")
        for k, s in enumerate(subs):
            if s.size and (s[0] < 0 or s[-1] >= self.n):
                raise InputError(f"class {k} has indices outside [0, {self.n})")
        allidx = np.concatenate(subs) if subs else np.empty(0, np.int64)
        if np.unique(allidx).size != allidx.size:
            raise InputError("labeled subsets must be pairwise disjoint")
        if allidx.size > self.n:
            raise InputError("more labels than nodes")
        object.__setattr__(self, "subsets", subs)

    @classmethod
    def from_labels(cls, indices, labels, n: int, n_classes: int | None = None) -> "LabeledSet":
        """Build from parallel arrays of node indices and their class ids."""
        indices = np.asarray(indices, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if indices.shape != labels.shape:
            raise InputError("indices and labels must have the same length")
        K = n_classes if n_classes is not None else (int(labels.max()) + 1 if labels.size else 1)
        if labels.size and (labels.min() < 0 or labels.max() >= K):
            raise InputError("class ids out of range")
        return cls(tuple(indices[labels == k] for k in range(K)), n)

    @classmethod
    def empty(cls, n: int, n_classes: int = 1) -> "LabeledSet":
        return cls(tuple(np.empty(0, np.int64) for _ in range(n_classes)), n)

    @property
    def n_classes(self) -> int:
        return len(self.subsets)

    @property
    def m(self) -> int:
        return int(sum(s.size for s in self.subsets))

    @property
    def indices(self) -> np.ndarray:
        """All labeled indices, ascending."""
        return np.sort(np.concatenate(self.subsets))

    @property
    def mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.indices] = True
        return mask

    @property
    def node_class(self) -> np.ndarray:
        """Class id per node, -1 for unlabeled nodes."""
        cls_ = np.full(self.n, -1, dtype=np.int64)
        for k, s in enumerate(self.subsets):
            cls_[s] = k
        return cls_

    def labels_of(self, idx) -> np.ndarray:
        return self.node_class[np.asarray(idx)]


@dataclass(frozen=True)
class SSLConfig:
    """Label weighting: ``mu`` for WNLL and ``alpha`` for the SSL affinity."""

    mu: float
    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu <= 0:
            raise ConfigError(f"mu must be positive, got {self.mu}")
        if not np.isfinite(self.alpha):
            raise ConfigError(f"alpha must be finite, got {self.alpha}")

    @classmethod
    def default(cls, S: LabeledSet, mu: float | None = None, alpha: float | None = None) -> "SSLConfig":
        """``mu = n / m`` (inverse sample rate) and ``alpha = mu - 1`` unless given."""
        if mu is None:
            mu = S.n / S.m if S.m else 1.0
        if alpha is None:
            alpha = mu - 1.0
        return cls(float(mu), float(alpha))


def _check(W, S: LabeledSet) -> sparse.csr_matrix:
    W = as_affinity(W)
    if W.shape[0] != S.n:
        raise InputError(f"labeled set is for n={S.n} but affinity has n={W.shape[0]}")
    return W


def _from_entries(rows, cols, vals, n: int) -> sparse.csr_matrix:
    M = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    M.eliminate_zeros()
    M.sort_indices()
    return M


def _mixed_pairs(W: sparse.csr_matrix, S: LabeledSet):
    """Stored entries of W with exactly one labeled endpoint."""
    C = W.tocoo()
    mask = S.mask
    keep = mask[C.row] != mask[C.col]
    return C.row[keep], C.col[keep], C.data[keep]


def _cross_pairs(W: sparse.csr_matrix, S: LabeledSet):
    """Stored entries of W joining labeled nodes of different classes."""
    C = W.tocoo()
    cls_ = S.node_class
    a, b = cls_[C.row], cls_[C.col]
    keep = (a >= 0) & (b >= 0) & (a != b)
    return C.row[keep], C.col[keep], C.data[keep]


def _same_pairs(S: LabeledSet):
    """All ordered pairs i != j of labeled nodes sharing a class (fill-in allowed)."""
    rows, cols = [], []
    for s in S.subsets:
        if s.size < 2:
            continue
        r, c = np.meshgrid(s, s, indexing="ij")
        off = r != c
        rows.append(r[off])
        cols.append(c[off])
    if not rows:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def max_affinity(W) -> float:
    """Largest off-diagonal entry of the unsupervised affinity (0 for an empty graph)."""
    W = sparse.csr_matrix(W)
    return float(W.data.max()) if W.nnz else 0.0


def wnll_labeled_affinity(W, S: LabeledSet) -> sparse.csr_matrix:
    """Copy of W restricted to edges with exactly one labeled endpoint."""
    W = _check(W, S)
    r, c, v = _mixed_pairs(W, S)
    return _from_entries(r, c, v, S.n)


def build_w_wnll(W, S: LabeledSet, config: SSLConfig | None = None) -> sparse.csr_matrix:
    """``2 W + (mu - 1) W_labeled`` with the WNLL labeled part."""
    W = _check(W, S)
    config = config or SSLConfig.default(S)
    if config.mu < 1:
        warnings.warn(
            f"mu={config.mu} < 1 down-weights edges at labeled nodes", RuntimeWarning, stacklevel=2
        )
    out = (2.0 * W + (config.mu - 1.0) * wnll_labeled_affinity(W, S)).tocsr()
    out.sort_indices()
    return out


def ssl_labeled_affinity(W, S: LabeledSet, config: SSLConfig | None = None) -> sparse.csr_matrix:
    """Labeled part of the SSL affinity.

    Same-class labeled pairs get ``max(W)``, labeled pairs of different
    classes get ``-(2/alpha) W_ij``, labeled-unlabeled pairs keep ``W_ij``
    and unlabeled pairs get 0.
    """
    W = _check(W, S)
    config = config or SSLConfig.default(S)
    if config.alpha <= 0:
        raise ConfigError(f"alpha must be positive for the cross-class term, got {config.alpha}")
    return _ssl_parts(W, S, config.alpha, ("W1", "W2", "W3"))


def _ssl_parts(W: sparse.csr_matrix, S: LabeledSet, alpha: float, parts) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    if "W1" in parts:
        r, c = _same_pairs(S)
        rows.append(r)
        cols.append(c)
        vals.append(np.full(r.size, max_affinity(W)))
    if "W2" in parts:
        r, c, v = _cross_pairs(W, S)
        rows.append(r)
        cols.append(c)
        vals.append(-(2.0 / alpha) * v)
    if "W3" in parts:
        r, c, v = _mixed_pairs(W, S)
        rows.append(r)
        cols.append(c)
        vals.append(v)
    return _from_entries(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), S.n)


def _combine(W: sparse.csr_matrix, S: LabeledSet, alpha: float, parts) -> sparse.csr_matrix:
    if alpha < 0:
        raise ConfigError(f"alpha must be non-negative, got {alpha}")
    if alpha == 0:
        # limit alpha -> 0: the cross-class pairs still vanish
        out = 2.0 * W
    else:
        out = 2.0 * W + alpha * _ssl_parts(W, S, alpha, parts)
    out = out.tocsr()
    if out.nnz and out.data.min() < -NEGATIVE_TOL * max(1.0, max_affinity(W)):
        raise InvariantError(f"negative entry {out.data.min():.3e} in label-aware affinity")
    if "W2" in parts:
        # 2 W_ij - alpha (2/alpha) W_ij is zero up to round-off; store the exact value
        out = out.tocoo()
        cls_ = S.node_class
        a, b = cls_[out.row], cls_[out.col]
        out.data[(a >= 0) & (b >= 0) & (a != b)] = 0.0
        out = out.tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def build_w_ssl(W, S: LabeledSet, config: SSLConfig | None = None) -> sparse.csr_matrix:
    """SSL affinity ``2 W + alpha W_labeled``; labeled pairs across classes end up disconnected."""
    W = _check(W, S)
    config = config or SSLConfig.default(S)
    return _combine(W, S, config.alpha, VARIANTS)


def build_ablation_affinity(
    W, S: LabeledSet, config: SSLConfig | None = None, variant: str = "W1"
) -> sparse.csr_matrix:
    """``2 W + alpha W^i`` keeping a single component of the labeled affinity.

    ``W1`` is the same-class attraction, ``W2`` the cross-class disconnection
    and ``W3`` the labeled-unlabeled reinforcement (equal to WNLL when
    ``alpha = mu - 1``).
    """
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    W = _check(W, S)
    config = config or SSLConfig.default(S)
    return _combine(W, S, config.alpha, (variant,))


def build_ssl_laplacian(W_variant) -> Laplacian:
    """Laplacian of any label-aware affinity (entries must be non-negative)."""
    return build_laplacian(W_variant)


LAPLACIANS = ("L", "L_WNLL", "L_SSL", "L1_SSL", "L2_SSL", "L3_SSL")


def laplacian_for(
    name: str, W, S: LabeledSet | None = None, config: SSLConfig | None = None
) -> Laplacian:
    """Build one of the named Laplacians in :data:`LAPLACIANS`."""
    if name not in LAPLACIANS:
        raise ConfigError(f"unknown Laplacian {name!r}; expected one of {LAPLACIANS}")
    if name == "L":
        return build_laplacian(W)
    if S is None:
        n = sparse.csr_matrix(W).shape[0]
        S = LabeledSet.empty(n)
    config = config or SSLConfig.default(S)
    if name == "L_WNLL":
        Wv = build_w_wnll(W, S, config)
    elif name == "L_SSL":
        Wv = build_w_ssl(W, S, config)
    else:
        Wv = build_ablation_affinity(W, S, config, variant="W" + name[1])
    return build_ssl_laplacian(Wv)

