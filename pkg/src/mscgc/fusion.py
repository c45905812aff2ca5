"""Attention-weighted fusion of per-view affinity matrices.

For p views with n x n affinities ``Y_1..Y_p`` and a weight matrix ``W`` of
shape (p*n, p), each sample gets a row of view weights

    a = l2_rows(softmax_rows(tanh([Y_1 ... Y_p] @ W)))

and the fused affinity takes row i of every view scaled by ``a[i, view]``.
The concatenated matrix is never formed; ``[Y_1 ... Y_p] @ W`` is
accumulated block by block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import graph_convolve


@dataclass(frozen=True)
class AttentionParams:
    W: np.ndarray
    loss_history: tuple = field(default=())

    @property
    def n_views(self) -> int:
        return self.W.shape[1]

    @property
    def n_samples(self) -> int:
        return self.W.shape[0] // self.W.shape[1]


def _check_views(Ys):
    Ys = [np.asarray(Y, dtype=np.float64) for Y in Ys]
    if not Ys:
        raise ValueError("at least one view is required")
    n = Ys[0].shape[0]
    for Y in Ys:
        if Y.shape != (n, n):
            raise ValueError(f"all affinities must be {n}x{n}, got {Y.shape}")
    return Ys, n


def init_params(n: int, p: int, seed: int = 0, scale: float = 0.1) -> AttentionParams:
    """Uniform ``[-scale, scale]`` initialization of the (p*n, p) weight matrix."""
    rng = np.random.default_rng(seed)
    return AttentionParams(rng.uniform(-scale, scale, size=(p * n, p)))


def uniform_weights(n: int, p: int) -> np.ndarray:
    return np.full((n, p), 1.0 / np.sqrt(p))


def _forward(Ys, W):
    n, p = Ys[0].shape[0], len(Ys)
    if W.shape != (p * n, p):
        raise ValueError(f"W must have shape ({p * n}, {p}), got {W.shape}")
    logits = sum(Y @ W[v * n:(v + 1) * n] for v, Y in enumerate(Ys))
    T = np.tanh(logits)
    E = np.exp(T - T.max(axis=1, keepdims=True))
    S = E / E.sum(axis=1, keepdims=True)
    norms = np.linalg.norm(S, axis=1, keepdims=True)
    return T, S, norms, S / norms


def attention_forward(Ys: Sequence[np.ndarray], params) -> np.ndarray:
    """Per-sample view weights, shape (n, p), rows nonnegative with unit norm."""
    Ys, _ = _check_views(Ys)
    W = params.W if isinstance(params, AttentionParams) else np.asarray(params, dtype=np.float64)
    return _forward(Ys, W)[3]


def fuse_raw(Ys, weights) -> np.ndarray:
    Ys, n = _check_views(Ys)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (n, len(Ys)):
        raise ValueError(f"weights must have shape ({n}, {len(Ys)}), got {weights.shape}")
    return sum(weights[:, v, None] * Y for v, Y in enumerate(Ys))


def fuse(Ys: Sequence[np.ndarray], weights: np.ndarray) -> np.ndarray:
    """Row-weighted sum of the views, symmetrized as ``(R + R^T) / 2``."""
    raw = fuse_raw(Ys, weights)
    fused = 0.5 * (raw + raw.T)
    if np.any(fused < 0):
        raise ValueError("fused affinity has negative entries")
    return fused


def fusion_loss(W, Ys, Bs, lam) -> float:
    """Self-expression loss of every view's features through the fused graph.

    ``sum_v ||B_v - Y_F^T B_v||^2 + lam ||Y_F||^2`` where ``B_v`` are the
    propagated features of view v and ``Y_F`` the fused affinity.
    """
    Ys, _ = _check_views(Ys)
    return _loss_and_grad(np.asarray(W, dtype=np.float64), Ys, Bs, lam, with_grad=False)[0]


def _loss_and_grad(W, Ys, Bs, lam, with_grad=True):
    T, S, norms, a = _forward(Ys, W)
    raw = sum(a[:, v, None] * Y for v, Y in enumerate(Ys))
    YF = 0.5 * (raw + raw.T)
    loss = lam * np.sum(YF ** 2)
    residuals = []
    for B in Bs:
        R = B - YF.T @ B
        residuals.append(R)
        loss += np.sum(R ** 2)
    if not with_grad:
        return float(loss), None

    # d loss / d YF
    gY = 2.0 * lam * YF
    for B, R in zip(Bs, residuals):
        gY -= 2.0 * B @ R.T
    g_raw = 0.5 * (gY + gY.T)
    g_a = np.stack([np.einsum("ij,ij->i", g_raw, Y) for Y in Ys], axis=1)
    # back through row l2 normalization, softmax, tanh
    g_S = (g_a - a * np.sum(a * g_a, axis=1, keepdims=True)) / norms
    g_T = S * (g_S - np.sum(g_S * S, axis=1, keepdims=True))
    g_logits = g_T * (1.0 - T ** 2)
    grad = np.concatenate([Y.T @ g_logits for Y in Ys], axis=0)
    return float(loss), grad


def fusion_loss_and_grad(W, Ys, Bs, lam):
    Ys, _ = _check_views(Ys)
    return _loss_and_grad(np.asarray(W, dtype=np.float64), Ys, Bs, lam)


def train_attention(Ys, Fs, a_norms=None, lam=100.0, epochs=50, step=1e-3, seed=0,
                    hops=1, max_halvings=30) -> AttentionParams:
    """Fit the attention weight matrix by gradient descent with backtracking.

    Each epoch takes one gradient step; if the loss would rise, the step is
    halved until it does not (at most ``max_halvings`` times, after which
    training stops).  The halved step carries over to later epochs.  The
    returned ``loss_history`` starts with the loss at initialization and has
    one entry per accepted step.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if epochs < 0:
        raise ValueError(f"epochs must be nonnegative, got {epochs}")
    Ys, n = _check_views(Ys)
    if len(Fs) != len(Ys):
        raise ValueError("need one feature matrix per view")
    Fs = [np.asarray(F, dtype=np.float64) for F in Fs]
    if a_norms is None:
        Bs = Fs
    else:
        Bs = [graph_convolve(F, A, hops) for A, F in zip(a_norms, Fs)]

    W = init_params(n, len(Ys), seed).W
    loss, grad = _loss_and_grad(W, Ys, Bs, lam)
    history = [loss]
    for _ in range(epochs):
        for _ in range(max_halvings + 1):
            candidate = W - step * grad
            new_loss = _loss_and_grad(candidate, Ys, Bs, lam, with_grad=False)[0]
            if new_loss <= loss:
                break
            step *= 0.5
        else:
            break
        W = candidate
        loss, grad = _loss_and_grad(W, Ys, Bs, lam)
        history.append(loss)
    return AttentionParams(W, loss_history=tuple(history))
