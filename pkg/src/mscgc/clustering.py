"""Spectral clustering: normalized Laplacian embedding followed by k-means."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    n_clusters: int
    inertia: float = float("nan")
    degenerate: bool = False
    history: tuple = field(default=(), repr=False)


def _check_affinity(Y, tol=1e-12):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValueError(f"affinity must be square, got {Y.shape}")
    scale = max(np.abs(Y).max(initial=0.0), 1.0)
    if np.abs(Y - Y.T).max(initial=0.0) > tol * scale:
        raise ValueError("affinity is not symmetric")
    if Y.min(initial=0.0) < 0:
        raise ValueError("affinity has negative entries")
    return Y


def normalized_laplacian(Y: np.ndarray) -> np.ndarray:
    """``I - D^-1/2 Y D^-1/2``, with ``D^-1/2`` taken as 0 on isolated nodes."""
    Y = _check_affinity(Y)
    deg = Y.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    L = -(inv_sqrt[:, None] * Y * inv_sqrt[None, :])
    L[np.diag_indices_from(L)] += 1.0
    return 0.5 * (L + L.T)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def spectral_embedding(Y: np.ndarray, n_clusters: int) -> np.ndarray:
    """Row-normalized eigenvectors of the ``n_clusters`` smallest Laplacian eigenvalues.

    Each eigenvector is signed so its largest-magnitude entry is positive;
    all-zero rows stay zero.
    """
    L = normalized_laplacian(Y)
    n = L.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must lie in [1, {n}], got {n_clusters}")
    _, vectors = linalg.eigh(L, subset_by_index=[0, n_clusters - 1])
    vectors = _fix_signs(vectors)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


# ---------------------------------------------------------------------------
# k-means


def _sq_dist_to_centers(X, centers):
    d = (
        np.einsum("ij,ij->i", X, X)[:, None]
        - 2.0 * X @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(d, 0.0)


def kmeans_plusplus(X: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each new center drawn with probability ~ D(x)^2."""
    n = X.shape[0]
    centers = np.empty((n_clusters, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dist_to_centers(X, centers[:1])[:, 0]
    for c in range(1, n_clusters):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centers[c] = X[idx]
        closest = np.minimum(closest, _sq_dist_to_centers(X, centers[c:c + 1])[:, 0])
    return centers


def _lloyd(X, centers, max_iter):
    n_clusters = centers.shape[0]
    labels = None
    history = []
    for _ in range(max_iter):
        dist = _sq_dist_to_centers(X, centers)
        new_labels = np.argmin(dist, axis=1)
        # repair empty clusters with the point farthest from its center
        for c in range(n_clusters):
            if not np.any(new_labels == c):
                own = dist[np.arange(len(X)), new_labels]
                counts = np.bincount(new_labels, minlength=n_clusters)
                own[counts[new_labels] <= 1] = -1.0
                far = int(np.argmax(own))
                new_labels[far] = c
        history.append(float(dist[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        for c in range(n_clusters):
            centers[c] = X[labels == c].mean(axis=0)
    inertia = float(_sq_dist_to_centers(X, centers)[np.arange(len(X)), labels].sum())
    return labels, inertia, history


def kmeans(X: np.ndarray, n_clusters: int, restarts: int = 10, seed: int = 0,
           max_iter: int = 300) -> ClusterAssignment:
    """Best of ``restarts`` Lloyd runs from k-means++ seeds.

    Restart ``r`` uses the generator seeded with ``seed + r``.  Ties in the
    assignment step go to the lowest cluster index.
    """
    X = np.asarray(X, dtype=np.float64)
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    n = X.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must lie in [1, {n}], got {n_clusters}")
    degenerate = len(np.unique(X, axis=0)) < n_clusters
    if degenerate:
        logger.warning("fewer distinct points than clusters (%d); partition is degenerate", n_clusters)

    best = None
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        centers = kmeans_plusplus(X, n_clusters, rng)
        labels, inertia, history = _lloyd(X, centers, max_iter)
        if best is None or inertia < best[1]:
            best = (labels, inertia, history)
    labels, inertia, history = best
    return ClusterAssignment(labels=labels, n_clusters=n_clusters, inertia=inertia,
                             degenerate=degenerate, history=tuple(history))


def kmeans_objective(X, labels) -> float:
    """Sum of squared distances to each cluster's mean."""
    X = np.asarray(X, dtype=np.float64)
    total = 0.0
    for c in np.unique(labels):
        members = X[labels == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def spectral_cluster(Y: np.ndarray, n_clusters: int, restarts: int = 10, seed: int = 0) -> ClusterAssignment:
    return kmeans(spectral_embedding(Y, n_clusters), n_clusters, restarts=restarts, seed=seed)
