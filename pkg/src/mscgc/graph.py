"""KNN graphs and the symmetric GCN propagation matrix."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist


def pairwise_sq_distances(features: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows.

    Computed from coordinate differences, so duplicate rows are exactly 0
    apart and equidistant points compare equal.
    """
    features = np.asarray(features, dtype=np.float64)
    return cdist(features, features, metric="sqeuclidean")


def knn_adjacency(features: np.ndarray, k: int) -> np.ndarray:
    """Binary symmetric KNN graph on the rows of ``features``.

    Node ``i`` links to its ``k`` nearest other rows; distance ties go to the
    lower index.  The directed graph is symmetrized with a logical OR.
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    dist = pairwise_sq_distances(features)
    np.fill_diagonal(dist, np.inf)
    # stable sort keeps index order among equal distances
    neighbors = np.argsort(dist, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n), dtype=np.float64)
    adj[np.repeat(np.arange(n), k), neighbors.ravel()] = 1.0
    return np.maximum(adj, adj.T)


def normalize_adjacency(adj: np.ndarray) -> np.ndarray:
    """Return ``D^-1/2 (A + I) D^-1/2`` with D the degree matrix of A + I."""
    adj = np.asarray(adj, dtype=np.float64)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError(f"adjacency must be square, got {adj.shape}")
    a_tilde = adj + np.eye(adj.shape[0])
    inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return inv_sqrt[:, None] * a_tilde * inv_sqrt[None, :]


def graph_convolve(features: np.ndarray, a_norm: np.ndarray, hops: int = 1) -> np.ndarray:
    """Propagate sample features ``hops`` times: ``a_norm**hops @ features``."""
    features = np.asarray(features, dtype=np.float64)
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    if a_norm.shape != (features.shape[0], features.shape[0]):
        raise ValueError(f"propagation matrix {a_norm.shape} does not match {features.shape[0]} samples")
    out = features
    for _ in range(hops):
        out = a_norm @ out
    return out
