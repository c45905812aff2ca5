"""Closed-form graph self-expression and affinity construction.

With samples as rows of ``F`` and propagated features ``B = A_norm @ F``, the
coefficient matrix minimizes

    ||B.T @ Z - F.T||_F^2 + lam * ||Z||_F^2

whose unique solution is ``Z = (B B^T + lam I)^-1 B F^T``.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .graph import graph_convolve


def _propagate(features, a_norm, hops):
    if a_norm is None:
        return features
    return graph_convolve(features, a_norm, hops)


def self_expression_loss(Z, features, a_norm=None, lam=1.0, hops=1) -> float:
    features = np.asarray(features, dtype=np.float64)
    B = _propagate(features, a_norm, hops)
    return float(np.sum((B.T @ Z - features.T) ** 2) + lam * np.sum(Z ** 2))


def residual_norm(Z, features, a_norm=None, hops=1) -> float:
    """Frobenius norm of the representation error ``B^T Z - F^T``."""
    features = np.asarray(features, dtype=np.float64)
    B = _propagate(features, a_norm, hops)
    return float(np.linalg.norm(B.T @ Z - features.T))


def solve_self_expression(features, a_norm=None, lam=100.0, zero_diag=True, hops=1) -> np.ndarray:
    """Ridge-regularized graph self-expression coefficients.

    Parameters
    ----------
    features : ndarray of shape (n_samples, n_features)
    a_norm : ndarray of shape (n_samples, n_samples) or None
        Normalized adjacency; ``None`` means the identity.
    lam : float
        Regularization weight, must be positive.
    zero_diag : bool
        Zero the diagonal of the solution afterwards.
    hops : int
        Number of propagation steps applied to ``features``.

    Returns
    -------
    Z : ndarray of shape (n_samples, n_samples)
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    features = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise ValueError("features contain non-finite values")
    B = _propagate(features, a_norm, hops)
    gram = B @ B.T
    gram[np.diag_indices_from(gram)] += lam
    Z = linalg.cho_solve(linalg.cho_factor(gram, lower=True), B @ features.T)
    if zero_diag:
        np.fill_diagonal(Z, 0.0)
    return Z


def build_affinity(Z: np.ndarray) -> np.ndarray:
    """Symmetric nonnegative affinity ``(|Z| + |Z|^T) / 2``."""
    absZ = np.abs(np.asarray(Z, dtype=np.float64))
    return 0.5 * (absZ + absZ.T)
