"""Smallest Laplacian eigenpairs and masked Dirichlet interpolation."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigError, InputError, SolverError
from .graph import Laplacian, apply, connected_components
from .laplacians import LabeledSet

log = logging.getLogger(__name__)

DENSE_LIMIT = 500


@dataclass(frozen=True)
class SpectralEmbedding:
    """Row i of ``coordinates`` is the embedding of node i."""

    coordinates: np.ndarray
    eigenvalues: np.ndarray
    skip_trivial: bool
    residuals: np.ndarray | None = None


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def _orthonormalize_against(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    # classical Gram-Schmidt applied twice is enough for full orthogonality
    for _ in range(2):
        w = w - V @ (V.T @ w)
    return w


def lanczos_smallest(
    L: Laplacian,
    nev: int,
    tol: float = 1e-10,
    ncv: int | None = None,
    max_restarts: int = 2000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thick-restart Lanczos with full reorthogonalization.

    Returns ``(eigenvalues, eigenvectors, residual_norms)`` for the ``nev``
    smallest eigenvalues. Convergence requires
    ``|L u - lambda u| <= tol * |L|_inf`` for every returned pair.
    """
    n = L.n
    if not 1 <= nev <= n:
        raise ConfigError(f"cannot compute {nev} eigenpairs of a {n}x{n} matrix")
    if ncv is None:
        ncv = min(n, max(2 * nev + 20, 40))
    ncv = min(max(ncv, nev + 2), n)
    keep = min(max(nev + (ncv - nev) // 2, nev + 1), ncv - 1)
    scale = max(L.norm_inf(), np.finfo(float).tiny)
    rng = np.random.default_rng(seed)

    V = np.empty((n, ncv))
    AV = np.empty((n, ncv))
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    j = 0  # columns of V with A applied
    filled = 1
    res = np.full(nev, np.inf)
    for restart in range(max_restarts):
        while j < ncv:
            AV[:, j] = apply(L, V[:, j])
            j += 1
            if filled < ncv:
                w = _orthonormalize_against(AV[:, j - 1], V[:, :filled])
                nrm = np.linalg.norm(w)
                if nrm <= 1e-12 * scale:
                    # invariant subspace found; continue with a fresh direction
                    w = _orthonormalize_against(rng.standard_normal(n), V[:, :filled])
                    nrm = np.linalg.norm(w)
                V[:, filled] = w / nrm
                filled += 1
        H = V.T @ AV
        H = 0.5 * (H + H.T)
        theta, Y = linalg.eigh(H)
        X = V @ Y[:, :keep]
        AX = AV @ Y[:, :keep]
        R = AX[:, :nev] - X[:, :nev] * theta[:nev]
        res = np.linalg.norm(R, axis=0)
        if np.all(res <= tol * scale) or ncv == n:
            log.debug("lanczos converged after %d restarts", restart)
            return theta[:nev], X[:, :nev], res
        # next Krylov direction: the part of A v_last outside the current basis
        f = _orthonormalize_against(AV[:, ncv - 1], V)
        V[:, :keep] = X
        AV[:, :keep] = AX
        f = _orthonormalize_against(f, V[:, :keep])
        nrm = np.linalg.norm(f)
        if nrm <= 1e-12 * scale:
            f = _orthonormalize_against(rng.standard_normal(n), V[:, :keep])
            nrm = np.linalg.norm(f)
        V[:, keep] = f / nrm
        j = keep
        filled = keep + 1
    raise SolverError(
        f"Lanczos did not converge in {max_restarts} restarts (max residual {res.max():.3e})",
        residual=float(res.max()),
        iterations=max_restarts,
    )


def smallest_eigenpairs(
    L: Laplacian,
    count: int,
    skip_trivial: bool = True,
    method: str = "auto",
    tol: float = 1e-10,
    seed: int = 0,
) -> SpectralEmbedding:
    """The ``count`` smallest eigenpairs of ``L``, optionally dropping the constant one.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense up to
    :data:`DENSE_LIMIT` nodes). Columns are sign-normalized so their
    largest-magnitude entry is positive.
    """
    n = L.n
    total = count + (1 if skip_trivial else 0)
    if count < 1 or total > n:
        raise ConfigError(f"need 1 <= count and count + skip_trivial <= n, got count={count}, n={n}")
    if skip_trivial:
        ncomp, _ = connected_components(L.affinity)
        if ncomp > 1:
            warnings.warn(
                f"graph has {ncomp} components; only one kernel vector is dropped and the "
                "remaining ones stay in the embedding",
                RuntimeWarning,
                stacklevel=2,
            )
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "lanczos"
    if method == "dense":
        vals, vecs = linalg.eigh(L.toarray(), subset_by_index=(0, total - 1))
        res = np.linalg.norm(apply(L, vecs) - vecs * vals, axis=0)
    elif method == "lanczos":
        vals, vecs, res = lanczos_smallest(L, total, tol=tol, seed=seed)
    else:
        raise ConfigError(f"unknown eigensolver method {method!r}")
    start = 1 if skip_trivial else 0
    U = _fix_signs(vecs[:, start:])
    return SpectralEmbedding(U, vals[start:], skip_trivial, res[start:])


@dataclass(frozen=True)
class DirichletSolution:
    values: np.ndarray
    residual: float
    iterations: int


def _labeled_indices(S) -> np.ndarray:
    if isinstance(S, LabeledSet):
        return S.indices
    return np.asarray(S, dtype=np.int64).ravel()


def conjugate_gradient(matvec, b, diag, tol=1e-10, maxiter=None, x0=None):
    """Jacobi-preconditioned CG for a symmetric positive definite operator.

    Works column-wise on an (n, p) right-hand side. Returns ``(x, rel_res, it)``
    where ``rel_res`` is the largest relative residual over the columns.
    """
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    if single:
        b = b[:, None]
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    Minv = (1.0 / diag)[:, None]
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float).reshape(b.shape)
    bnorm = np.linalg.norm(b, axis=0)
    bnorm[bnorm == 0] = 1.0
    r = b - matvec(x)
    z = Minv * r
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    rel = np.linalg.norm(r, axis=0) / bnorm
    it = 0
    while rel.max() > tol and it < maxiter:
        Ap = matvec(p)
        pAp = np.einsum("ij,ij->j", p, Ap)
        active = rel > tol
        step = np.where(active & (pAp > 0), rz / np.where(pAp > 0, pAp, 1.0), 0.0)
        x += step * p
        r -= step * Ap
        z = Minv * r
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(rz > 0, rz_new / np.where(rz > 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = rz_new
        it += 1
        rel = np.linalg.norm(r, axis=0) / bnorm
    # report the true residual, not the recursively updated one
    rel = np.linalg.norm(b - matvec(x), axis=0) / bnorm
    if single:
        x = x[:, 0]
    return x, float(rel.max()), it


def _check_boundary(L: Laplacian, idx: np.ndarray):
    ncomp, comp = connected_components(L.affinity)
    if ncomp > 1:
        has_label = np.zeros(ncomp, dtype=bool)
        has_label[comp[idx]] = True
        if not has_label.all():
            bad = int(np.flatnonzero(~has_label)[0])
            nodes = np.flatnonzero(comp == bad)
            raise InputError(
                f"connected component {bad} ({nodes.size} nodes, first node {nodes[0]}) "
                "contains no labeled node; the interpolation is not unique"
            )
    isolated = idx[L.degree[idx] == 0]
    if isolated.size:
        raise InputError(f"labeled node {isolated[0]} is isolated (L_ii = 0)")


def _solve_reduced(L: Laplacian, idx: np.ndarray, G: np.ndarray, tol: float, maxiter):
    """Solve L_UU F_U = -L_US G on the unlabeled nodes U for an (m, p) block G."""
    n = L.n
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    free = np.flatnonzero(~mask)
    F = np.zeros((n, G.shape[1]))
    F[idx] = G
    if free.size == 0:
        return F, 0.0, 0
    W_UU = L.affinity[free][:, free].tocsr()
    W_US = L.affinity[free][:, idx].tocsr()
    d = L.degree[free]
    rhs = W_US @ G

    def matvec(X):
        return d[:, None] * X - W_UU @ X

    maxiter = 10 * n if maxiter is None else maxiter
    X, rel, it = conjugate_gradient(matvec, rhs, d, tol=tol, maxiter=maxiter)
    if rel > tol:
        raise SolverError(
            f"CG stopped after {it} iterations with relative residual {rel:.3e}",
            residual=rel,
            iterations=it,
        )
    F[free] = X
    return F, rel, it


def solve_dirichlet(L: Laplacian, S, g, tol: float = 1e-10, maxiter: int | None = None) -> DirichletSolution:
    """Harmonic interpolation: ``f = g`` on S and ``(Lf)_i = 0`` elsewhere.

    ``S`` is a :class:`LabeledSet` (its ascending ``indices`` are used) or an
    index array; ``g`` lists the boundary values in that order.

    The masked system ``(M o L) f = b`` scales each labeled row by ``1/L_ii``
    and zeroes its off-diagonal entries, so that row reads ``f_i = g_i``.
    Substituting those rows and moving the known values to the right-hand
    side leaves ``L_UU f_U = W_US g``, which is symmetric positive definite
    when every connected component holds a labeled node.
    """
    idx = _labeled_indices(S)
    g = np.asarray(g, dtype=float).ravel()
    if idx.size == 0:
        raise InputError("Dirichlet interpolation needs at least one labeled node")
    if g.shape != idx.shape:
        raise InputError(f"got {g.size} boundary values for {idx.size} labeled nodes")
    if np.unique(idx).size != idx.size or idx.min() < 0 or idx.max() >= L.n:
        raise InputError("labeled indices must be distinct and within range")
    _check_boundary(L, idx)
    F, rel, it = _solve_reduced(L, idx, g[:, None], tol, maxiter)
    return DirichletSolution(F[:, 0], rel, it)


def solve_multiclass_dirichlet(
    L: Laplacian, S: LabeledSet, tol: float = 1e-10, maxiter: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """One-vs-rest harmonic scores, shape (n, K), and the argmax label per node.

    Class k is interpolated from 1 on S_k and 0 on the other labeled nodes.
    Ties go to the smallest class id.
    """
    if S.n_classes < 2:
        raise ConfigError("multiclass interpolation needs at least two classes")
    empty = [k for k, s in enumerate(S.subsets) if s.size == 0]
    if empty:
        raise InputError(f"class {empty[0]} has no labeled node")
    idx = S.indices
    _check_boundary(L, idx)
    cls_ = S.labels_of(idx)
    G = (cls_[:, None] == np.arange(S.n_classes)[None, :]).astype(float)
    F, _, _ = _solve_reduced(L, idx, G, tol, maxiter)
    return F, np.argmax(F, axis=1)


def solve_pm1_dirichlet(L: Laplacian, S: LabeledSet, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Two-class interpolation from +1 on S_0 and -1 on S_1; label 1 where f < 0."""
    if S.n_classes != 2:
        raise ConfigError("the +1/-1 encoding needs exactly two classes")
    idx = S.indices
    g = np.where(S.labels_of(idx) == 0, 1.0, -1.0)
    sol = solve_dirichlet(L, idx, g, tol=tol)
    return sol.values, (sol.values < 0).astype(np.int64)
