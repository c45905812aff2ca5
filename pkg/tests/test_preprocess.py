import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mscgc import preprocess
from mscgc.hsi_io import HsiCube, LabelMap, select_samples


def _all_pixels(rows, cols):
    return select_samples(LabelMap(np.ones((rows, cols), dtype=int)))


# ---------------------------------------------------------------------------
# PCA


def test_pca_rank_one_axis():
    t = np.linspace(-2.0, 3.0, 12)
    axis = np.array([0.0, 3.0, 4.0]) / 5.0
    cube = HsiCube((np.outer(t, axis) + [1.0, 2.0, 3.0]).reshape(3, 4, 3))
    reduced, model = preprocess.pca_fit_transform(cube, 1)
    np.testing.assert_allclose(model.components[:, 0], axis, atol=1e-12)
    np.testing.assert_allclose(reduced.data.ravel(), t - t.mean(), atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_pca_reconstruction_error_equals_dropped_variance(seed):
    rng = np.random.default_rng(seed)
    pixels = rng.standard_normal((50, 6)) @ rng.standard_normal((6, 6))
    cube = HsiCube(pixels.reshape(5, 10, 6))
    reduced, model = preprocess.pca_fit_transform(cube, 3)

    # oracle: singular values of the centered data
    centered = pixels - pixels.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    dropped = np.sum(sv[3:] ** 2) / len(pixels)

    recon = reduced.pixels() @ model.components.T + model.mean
    err = np.sum((pixels - recon) ** 2) / len(pixels)
    assert abs(err - dropped) <= 1e-8 * dropped
    np.testing.assert_allclose(model.eigenvalues, sv[:3] ** 2 / len(pixels), rtol=1e-10)


def test_pca_invariants():
    rng = np.random.default_rng(7)
    cube = HsiCube(rng.random((6, 7, 9)))
    _, model = preprocess.pca_fit_transform(cube, 5)
    np.testing.assert_allclose(model.components.T @ model.components, np.eye(5), atol=1e-10)
    assert np.all(np.diff(model.eigenvalues) <= 0)
    assert np.all(model.eigenvalues >= 0)
    np.testing.assert_allclose(model.transform(model.mean[None, :]), 0.0, atol=1e-14)
    pivot = np.argmax(np.abs(model.components), axis=0)
    assert np.all(model.components[pivot, np.arange(5)] > 0)
    assert 0 < model.explained_variance_ratio <= 1


def test_pca_degenerate_covariance():
    cube = HsiCube(np.ones((3, 3, 4)))
    reduced, model = preprocess.pca_fit_transform(cube, 2)
    assert np.all(reduced.data == 0)
    np.testing.assert_array_equal(model.eigenvalues, [0.0, 0.0])


@pytest.mark.parametrize("d", [0, 5])
def test_pca_d_out_of_range(d):
    with pytest.raises(ValueError):
        preprocess.pca_fit_transform(HsiCube(np.zeros((2, 2, 4))), d)


# ---------------------------------------------------------------------------
# patches


def test_patch_window_of_one_is_the_spectrum():
    rng = np.random.default_rng(0)
    cube = HsiCube(rng.random((4, 5, 3)))
    index = select_samples(LabelMap(rng.integers(0, 2, size=(4, 5))))
    feats = preprocess.extract_patches(cube, 1, index)
    np.testing.assert_array_equal(feats, cube.pixels()[index.pixel_ids])


def test_patch_constant_cube():
    cube = HsiCube(np.full((5, 5, 2), 3.5))
    feats = preprocess.extract_patches(cube, 5, _all_pixels(5, 5))
    assert feats.shape == (25, 50)
    assert np.all(feats == 3.5)


def _mirror(i, n):
    # reflect about the edge pixel without repeating it
    if i < 0:
        return -i
    if i >= n:
        return 2 * (n - 1) - i
    return i


def _patch_oracle(image, r, c, size):
    half = size // 2
    rows, cols, bands = image.shape
    out = []
    for dr in range(-half, half + 1):
        for dc in range(-half, half + 1):
            for b in range(bands):
                out.append(image[_mirror(r + dr, rows), _mirror(c + dc, cols), b])
    return np.array(out)


def test_patch_ramp_corner_by_hand():
    ramp = (np.arange(4)[:, None] * 4 + np.arange(4)[None, :]).astype(float)[:, :, None]
    feats = preprocess.extract_patches(HsiCube(ramp), 3, _all_pixels(4, 4))
    np.testing.assert_array_equal(feats[0], [5, 4, 5, 1, 0, 1, 5, 4, 5])
    np.testing.assert_array_equal(feats[0], _patch_oracle(ramp, 0, 0, 3))


@pytest.mark.parametrize("size", [3, 5, 7])
def test_patches_match_mirror_oracle(size):
    rng = np.random.default_rng(size)
    image = rng.random((5, 6, 2))
    feats = preprocess.extract_patches(HsiCube(image), size, _all_pixels(5, 6))
    for pid in range(30):
        r, c = divmod(pid, 6)
        np.testing.assert_array_equal(feats[pid], _patch_oracle(image, r, c, size))


@pytest.mark.parametrize("size", [2, 0, 11])
def test_patch_bad_size(size):
    with pytest.raises(ValueError):
        preprocess.extract_patches(HsiCube(np.zeros((5, 5, 1))), size, _all_pixels(5, 5))


# ---------------------------------------------------------------------------
# morphology


def _naive_open_by_reconstruction(image, radius):
    """Loop-based erosion followed by 8-connected geodesic dilation to stability."""
    rows, cols = image.shape
    offsets = [(dr, dc) for dr in range(-radius, radius + 1) for dc in range(-radius, radius + 1)
               if dr * dr + dc * dc <= radius * radius]
    marker = np.empty_like(image)
    for r in range(rows):
        for c in range(cols):
            marker[r, c] = min(image[r + dr, c + dc] for dr, dc in offsets
                               if 0 <= r + dr < rows and 0 <= c + dc < cols)
    while True:
        grown = marker.copy()
        for r in range(rows):
            for c in range(cols):
                grown[r, c] = max(marker[rr, cc]
                                  for rr in range(max(r - 1, 0), min(r + 2, rows))
                                  for cc in range(max(c - 1, 0), min(c + 2, cols)))
        grown = np.minimum(grown, image)
        if np.array_equal(grown, marker):
            return marker
        marker = grown


@pytest.mark.parametrize("radius", [1, 2, 3])
def test_opening_matches_naive_oracle(radius):
    rng = np.random.default_rng(radius)
    image = rng.random((9, 11))
    np.testing.assert_array_equal(preprocess.morph_reconstruct_open(image, radius),
                                  _naive_open_by_reconstruction(image, radius))
    np.testing.assert_array_equal(preprocess.morph_reconstruct_close(image, radius),
                                  -_naive_open_by_reconstruction(-image, radius))


def test_isolated_peak_removed():
    image = np.zeros((5, 5))
    image[2, 2] = 1.0
    np.testing.assert_array_equal(preprocess.morph_reconstruct_open(image, 1), np.zeros((5, 5)))


def test_flat_image_fixed_point():
    image = np.full((6, 6), 0.25)
    np.testing.assert_array_equal(preprocess.morph_reconstruct_open(image, 2), image)
    np.testing.assert_array_equal(preprocess.morph_reconstruct_close(image, 2), image)


def test_disk_shape():
    np.testing.assert_array_equal(preprocess.disk(1), [[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    with pytest.raises(ValueError):
        preprocess.disk(0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (7, 8), elements=st.floats(0, 1)), st.integers(1, 3))
def test_opening_and_closing_idempotent(image, radius):
    opened = preprocess.morph_reconstruct_open(image, radius)
    np.testing.assert_array_equal(preprocess.morph_reconstruct_open(opened, radius), opened)
    closed = preprocess.morph_reconstruct_close(image, radius)
    np.testing.assert_array_equal(preprocess.morph_reconstruct_close(closed, radius), closed)


# ---------------------------------------------------------------------------
# EMP


def test_emp_dimension():
    rng = np.random.default_rng(0)
    feats = preprocess.emp_features(HsiCube(rng.random((6, 6, 1))), [1, 2], _all_pixels(6, 6))
    assert feats.shape == (36, 5)
    feats = preprocess.emp_features(HsiCube(rng.random((6, 6, 3))), [1, 2, 3, 4], _all_pixels(6, 6))
    assert feats.shape == (36, 27)


def test_emp_constant_cube():
    feats = preprocess.emp_features(HsiCube(np.full((4, 4, 1), 2.0)), [1], _all_pixels(4, 4))
    assert feats.shape == (16, 3)
    assert np.all(feats == feats[:, :1])


@pytest.mark.parametrize("radii", [[], [2, 1], [1, 1], [0, 1]])
def test_emp_bad_radii(radii):
    with pytest.raises(ValueError):
        preprocess.emp_features(HsiCube(np.zeros((4, 4, 1))), radii, _all_pixels(4, 4))


def test_emp_profile_order_and_scaling():
    rng = np.random.default_rng(5)
    cube = HsiCube(10 * rng.random((8, 8, 2)) - 3)
    radii = [1, 2, 3]
    feats = preprocess.emp_features(cube, radii, _all_pixels(8, 8)).reshape(64, 2, 7)
    assert feats.min() >= 0 and feats.max() <= 1
    # middle entry of each profile is the min-max scaled band
    band0 = cube.data[:, :, 0].ravel()
    np.testing.assert_allclose(feats[:, 0, 3], (band0 - band0.min()) / np.ptp(band0))
    # closings descend by radius, openings ascend
    assert np.all(np.diff(feats, axis=2) <= 0)


def test_emp_rows_follow_index():
    rng = np.random.default_rng(9)
    cube = HsiCube(rng.random((5, 5, 2)))
    labels = rng.integers(0, 2, size=(5, 5))
    labels[0, 0] = 1
    index = select_samples(LabelMap(labels))
    full = preprocess.emp_features(cube, [1], _all_pixels(5, 5))
    np.testing.assert_array_equal(preprocess.emp_features(cube, [1], index), full[index.pixel_ids])


# ---------------------------------------------------------------------------
# feature scaling


def test_standardize_and_minmax():
    rng = np.random.default_rng(1)
    F = rng.random((20, 4)) * [1, 10, 100, 0]
    Z = preprocess.standardize(F)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), [1, 1, 1, 0], atol=1e-12)
    M = preprocess.minmax_columns(F)
    np.testing.assert_allclose(M.min(axis=0), 0)
    np.testing.assert_allclose(M.max(axis=0), [1, 1, 1, 0])
