"""Synthetic data with planted ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hsi_io import HsiCube, LabelMap


@dataclass(frozen=True)
class SynthSpec:
    clusters: int
    ambient_dim: int
    subspace_dim: int
    per_cluster: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.clusters < 1 or self.per_cluster < 1:
            raise ValueError("clusters and per_cluster must be positive")
        if not 1 <= self.subspace_dim < self.ambient_dim:
            raise ValueError("need 1 <= subspace_dim < ambient_dim")
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")

    @property
    def n_samples(self) -> int:
        return self.clusters * self.per_cluster


def _draw_bases(spec, rng):
    return [np.linalg.qr(rng.standard_normal((spec.ambient_dim, spec.subspace_dim)))[0]
            for _ in range(spec.clusters)]


def planted_bases(spec: SynthSpec) -> list:
    """The orthonormal bases used by :func:`gen_union_of_subspaces` for ``spec``."""
    return _draw_bases(spec, np.random.default_rng(spec.seed))


def gen_union_of_subspaces(spec: SynthSpec):
    """Samples drawn from ``spec.clusters`` random linear subspaces.

    Returns ``(features, truth)``: an (n, ambient_dim) matrix with one
    sample per row and cluster labels 0..K-1 in contiguous blocks.  Each
    sample is a unit-norm combination of its subspace's basis plus Gaussian
    noise of standard deviation ``spec.noise``.
    """
    rng = np.random.default_rng(spec.seed)
    bases = _draw_bases(spec, rng)
    blocks = []
    for basis in bases:
        coeff = rng.standard_normal((spec.subspace_dim, spec.per_cluster))
        coeff /= np.linalg.norm(coeff, axis=0, keepdims=True)
        blocks.append((basis @ coeff).T)
    features = np.vstack(blocks)
    features = features + spec.noise * rng.standard_normal(features.shape)
    truth = np.repeat(np.arange(spec.clusters), spec.per_cluster)
    return features, truth


def gen_synthetic_hsi(rows: int, cols: int, clusters: int, bands: int, noise: float = 0.0,
                      seed: int = 0, background: float = 0.05):
    """Stripe-patterned cube with one smooth spectral signature per stripe.

    The image is split into ``clusters`` horizontal stripes of near-equal
    height.  Each stripe's signature is a seeded random walk over the bands;
    i.i.d. Gaussian noise of standard deviation ``noise`` is added per pixel
    and band.  A seeded ``background`` fraction of pixels is labeled 0.
    """
    if min(rows, cols, bands) < 1 or not 1 <= clusters <= rows:
        raise ValueError("need positive sizes and 1 <= clusters <= rows")
    if noise < 0 or not 0 <= background < 1:
        raise ValueError("invalid noise or background fraction")
    rng = np.random.default_rng(seed)
    signatures = 1.0 + np.cumsum(rng.normal(0.0, 0.1, size=(clusters, bands)), axis=1)
    stripe = np.concatenate([np.full(len(chunk), c) for c, chunk in
                             enumerate(np.array_split(np.arange(rows), clusters))])
    class_map = np.repeat(stripe[:, None], cols, axis=1)
    data = signatures[class_map] + noise * rng.standard_normal((rows, cols, bands))

    labels = class_map + 1
    n_bg = int(round(background * rows * cols))
    if n_bg:
        labels.flat[rng.choice(rows * cols, size=n_bg, replace=False)] = 0
    return HsiCube(data), LabelMap(labels)
