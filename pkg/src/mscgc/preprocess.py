"""Band reduction and the two feature views.

The spatial-spectral view flattens an s x s window of the reduced cube
around every sample.  The texture view is an extended morphological profile:
for each principal component, closings and openings by reconstruction with a
family of growing disks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage
from skimage.morphology import reconstruction

from .hsi_io import HsiCube, SampleIndex


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # bands x d, orthonormal columns
    eigenvalues: np.ndarray  # top-d, nonincreasing
    total_variance: float

    @property
    def explained_variance_ratio(self) -> float:
        if self.total_variance <= 0:
            return 1.0
        return float(self.eigenvalues.sum() / self.total_variance)

    def transform(self, pixels: np.ndarray) -> np.ndarray:
        return (pixels - self.mean) @ self.components


def pca_fit(pixels: np.ndarray, d: int) -> PcaModel:
    """Fit PCA on rows of ``pixels`` keeping ``d`` components.

    Each component is signed so that its largest-magnitude entry is positive.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    n_bands = pixels.shape[1]
    if not 1 <= d <= n_bands:
        raise ValueError(f"d must lie in [1, {n_bands}], got {d}")
    mean = pixels.mean(axis=0)
    centered = pixels - mean
    cov = centered.T @ centered / pixels.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1][:, :d]
    pivot = np.argmax(np.abs(evecs), axis=0)
    evecs = evecs * np.sign(evecs[pivot, np.arange(d)])
    return PcaModel(mean=mean, components=evecs, eigenvalues=evals[:d].copy(),
                    total_variance=float(evals.sum()))


def pca_fit_transform(cube: HsiCube, d: int):
    """Project every pixel of ``cube`` onto its top ``d`` principal axes.

    Returns the reduced cube and the fitted model.
    """
    model = pca_fit(cube.pixels(), d)
    reduced = model.transform(cube.pixels()).reshape(cube.rows, cube.cols, d)
    return HsiCube(reduced), model


def extract_patches(cube: HsiCube, size: int, index: SampleIndex) -> np.ndarray:
    """Flattened ``size x size x bands`` windows around each sample pixel.

    Borders are mirror-padded (edge pixel not repeated).  Vectors are
    ordered row, column, band.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"window size must be a positive odd integer, got {size}")
    if size > 2 * min(cube.rows, cube.cols) - 1:
        raise ValueError(f"window size {size} too large for a {cube.rows}x{cube.cols} image")
    half = size // 2
    padded = np.pad(cube.data, ((half, half), (half, half), (0, 0)), mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (size, size), axis=(0, 1))
    # windows: rows x cols x bands x size x size
    r, c = np.divmod(index.pixel_ids, cube.cols)
    return np.ascontiguousarray(windows[r, c].transpose(0, 2, 3, 1).reshape(len(r), -1))


def disk(radius: int) -> np.ndarray:
    """Boolean disk {(dr, dc): dr^2 + dc^2 <= radius^2}."""
    if radius < 1:
        raise ValueError(f"structuring element radius must be >= 1, got {radius}")
    span = np.arange(-radius, radius + 1)
    return span[:, None] ** 2 + span[None, :] ** 2 <= radius ** 2


def morph_reconstruct_open(image: np.ndarray, radius: int) -> np.ndarray:
    """Opening by reconstruction with a disk of the given radius.

    The image is eroded by the disk (pixels outside the image are ignored),
    then the erosion is grown by geodesic dilation under the original image
    until it stops changing.
    """
    image = np.asarray(image, dtype=np.float64)
    eroded = ndimage.grey_erosion(image, footprint=disk(radius), mode="constant", cval=np.inf)
    return reconstruction(eroded, image, method="dilation")


def morph_reconstruct_close(image: np.ndarray, radius: int) -> np.ndarray:
    """Closing by reconstruction, the dual of the opening under negation."""
    image = np.asarray(image, dtype=np.float64)
    return -morph_reconstruct_open(-image, radius)


def _minmax(channel: np.ndarray) -> np.ndarray:
    lo, hi = channel.min(), channel.max()
    if hi - lo <= 0:
        return np.zeros_like(channel)
    return (channel - lo) / (hi - lo)


def morphological_profile(channel: np.ndarray, radii: Sequence[int]) -> np.ndarray:
    """Stack ``[close_rm, ..., close_r1, original, open_r1, ..., open_rm]``."""
    closings = [morph_reconstruct_close(channel, r) for r in reversed(radii)]
    openings = [morph_reconstruct_open(channel, r) for r in radii]
    return np.stack(closings + [channel] + openings, axis=-1)


def emp_features(cube: HsiCube, radii: Sequence[int], index: SampleIndex) -> np.ndarray:
    """Extended morphological profile of every band, sampled at ``index``.

    Each band is min-max scaled to [0, 1] before the profile is built, giving
    ``bands * (2 * len(radii) + 1)`` features per sample.
    """
    radii = [int(r) for r in radii]
    if not radii:
        raise ValueError("at least one structuring element radius is required")
    if any(r < 1 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be positive and strictly increasing, got {radii}")
    profiles = [morphological_profile(_minmax(cube.data[:, :, b]), radii) for b in range(cube.bands)]
    stacked = np.concatenate(profiles, axis=-1)
    return stacked.reshape(-1, stacked.shape[-1])[index.pixel_ids]


def standardize(features: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance columns; constant columns become zero."""
    features = np.asarray(features, dtype=np.float64)
    centered = features - features.mean(axis=0)
    std = centered.std(axis=0)
    std[std == 0] = 1.0
    return centered / std


def minmax_columns(features: np.ndarray) -> np.ndarray:
    """Rescale every column to [0, 1]; constant columns become zero.

    Unlike :func:`standardize` this keeps features nonnegative and
    uncentered, which the self-expression step relies on: centering makes
    cross-class inner products strongly negative, and those survive the
    absolute value taken when building the affinity.
    """
    features = np.asarray(features, dtype=np.float64)
    lo = features.min(axis=0)
    span = features.max(axis=0) - lo
    span[span == 0] = 1.0
    return (features - lo) / span


SCALERS = {"minmax": minmax_columns, "zscore": standardize}
