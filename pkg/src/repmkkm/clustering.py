"""Kernel k-means through its spectral relaxation, plus rounding to labels.

The relaxed problem ``min Tr(K (I - H H^T))`` over ``H^T H = I`` is solved by
the top-``k`` eigenvectors of ``K``.  Hard labels come from Lloyd's k-means
(k-means++ seeding, best of several restarts) on the row-normalized
embedding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError

MAX_LLOYD_ITERS = 300
LLOYD_RTOL = 1e-9


def update_embedding(K, k: int) -> np.ndarray:
    """Orthonormal eigenvectors of the ``k`` largest eigenvalues of ``K``.

    Columns are ordered by descending eigenvalue (ties keep the solver's
    order) and each column is signed so that its largest-magnitude entry is
    positive.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if K.ndim != 2 or K.shape[1] != n:
        raise ValueError(f"kernel must be square, got shape {K.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    K = 0.5 * (K + K.T)
    try:
        vals, vecs = scipy.linalg.eigh(K, subset_by_index=[n - k, n - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        finite = bool(np.all(np.isfinite(K)))
        norm = float(np.linalg.norm(K)) if finite else float("nan")
        raise NumericalError(
            f"eigendecomposition failed ({exc}); finite={finite}, frobenius_norm={norm:.3e}") from exc
    order = np.argsort(-vals[::-1], kind="stable")
    H = vecs[:, ::-1][:, order]
    pivots = np.argmax(np.abs(H), axis=0)
    signs = np.sign(H[pivots, np.arange(k)])
    signs[signs == 0] = 1.0
    return H * signs


def kmeans_plusplus(X, k: int, rng) -> np.ndarray:
    """k-means++ seeding; returns ``k`` rows of ``X`` as initial centers."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _assign(X, centers):
    D = (np.sum(X * X, axis=1)[:, None] - 2.0 * X @ centers.T
         + np.sum(centers * centers, axis=1)[None, :])
    labels = np.argmin(D, axis=1)
    cost = float(np.sum((X - centers[labels]) ** 2))
    return labels, cost


@dataclass
class KMeansRun:
    labels: np.ndarray
    centers: np.ndarray
    cost: float
    seed: int
    cost_history: list
    empty_clusters: list


def lloyd_kmeans(X, k: int, seed: int = 0, max_iter: int = MAX_LLOYD_ITERS,
                 rtol: float = LLOYD_RTOL) -> KMeansRun:
    """One k-means++ seeded Lloyd run.  Empty clusters keep their old center."""
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    centers = kmeans_plusplus(X, k, rng)
    labels, cost = _assign(X, centers)
    history = [cost]
    for _ in range(max_iter):
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
        new_labels, new_cost = _assign(X, centers)
        history.append(new_cost)
        converged = np.array_equal(new_labels, labels) or abs(cost - new_cost) <= rtol * max(cost, 1e-300)
        labels, cost = new_labels, new_cost
        if converged:
            break
    empty = [c for c in range(k) if not np.any(labels == c)]
    return KMeansRun(labels, centers, cost, seed, history, empty)


def normalize_rows(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    norms = np.linalg.norm(H, axis=1)
    out = H.copy()
    nz = norms > 0
    out[nz] /= norms[nz, None]
    return out


def discretize(H, k: int, seed: int = 0, restarts: int = 1, row_normalize: bool = True,
               return_run: bool = False):
    """Round a relaxed embedding to hard labels.

    Runs Lloyd's k-means ``restarts`` times with seeds ``seed, seed + 1, ...``
    and keeps the lowest-cost run (earlier seed on ties).  Zero rows are left
    unnormalized and simply join their nearest center.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    X = normalize_rows(H) if row_normalize else np.asarray(H, dtype=float)
    best = None
    for r in range(restarts):
        run = lloyd_kmeans(X, k, seed=seed + r)
        if best is None or run.cost < best.cost:
            best = run
    return best if return_run else best.labels


def relaxed_objective(K, H) -> float:
    """``Tr(K (I - H H^T)) = Tr(K) - Tr(H^T K H)``."""
    K = np.asarray(K, dtype=float)
    return float(np.trace(K) - np.sum((K @ H) * H))


def kernel_kmeans(K, k: int, seed: int = 0, restarts: int = 1, row_normalize: bool = True):
    """Spectral kernel k-means.  Returns ``(labels, H)``."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    H = update_embedding(K, k)
    labels = discretize(H, k, seed=seed, restarts=restarts, row_normalize=row_normalize)
    return labels, H
