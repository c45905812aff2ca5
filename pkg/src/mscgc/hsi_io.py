"""Reading and writing hyperspectral cubes, label maps and result images.

Cubes live in two files: a plain-text header with ``rows=``, ``cols=`` and
``bands=`` lines, and a companion ``.f32`` file holding little-endian
32-bit reals in band-interleaved-by-pixel order.  Label maps are either raw
little-endian 32-bit integers or portable graymaps (P5 binary / P2 ASCII).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

PathLike = Union[str, Path]


class HsiFormatError(ValueError):
    """Raised when an input file does not match its declared layout."""


@dataclass(frozen=True)
class HsiCube:
    """A rows x cols x bands raster stored as a float64 array."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or min(data.shape) < 1:
            raise HsiFormatError(f"cube must be 3-D with positive sizes, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise HsiFormatError("cube contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def pixels(self) -> np.ndarray:
        """Return the (rows*cols, bands) pixel matrix in row-major order."""
        return self.data.reshape(-1, self.bands)

    def crop(self, r0: int, r1: int, c0: int, c1: int) -> "HsiCube":
        """Half-open crop ``[r0, r1) x [c0, c1)``."""
        _check_crop(r0, r1, c0, c1, self.rows, self.cols)
        return HsiCube(self.data[r0:r1, c0:c1, :].copy())


@dataclass(frozen=True)
class LabelMap:
    """Integer class map; 0 is background, 1..K are classes."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise HsiFormatError(f"label map must be 2-D, got shape {labels.shape}")
        if labels.size and labels.min() < 0:
            raise HsiFormatError("label map contains negative labels")
        object.__setattr__(self, "labels", labels.astype(np.int64))

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self):
        return self.labels.shape

    def crop(self, r0: int, r1: int, c0: int, c1: int) -> "LabelMap":
        _check_crop(r0, r1, c0, c1, self.rows, self.cols)
        return LabelMap(self.labels[r0:r1, c0:c1].copy())


@dataclass(frozen=True)
class SampleIndex:
    """Labeled pixels in row-major order with classes re-coded to 0..K-1.

    ``classes`` holds the original label value of each re-coded class.
    """

    pixel_ids: np.ndarray
    truth: np.ndarray
    classes: np.ndarray
    shape: tuple

    def __len__(self) -> int:
        return len(self.pixel_ids)

    @property
    def n_classes(self) -> int:
        return len(self.classes)


def _check_crop(r0, r1, c0, c1, rows, cols):
    if not (0 <= r0 < r1 <= rows and 0 <= c0 < c1 <= cols):
        raise ValueError(f"crop [{r0}:{r1}, {c0}:{c1}] outside image of shape ({rows}, {cols})")


# ---------------------------------------------------------------------------
# cubes


def _read_header(header_path: Path) -> dict:
    fields = {}
    for lineno, raw in enumerate(header_path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise HsiFormatError(f"{header_path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        fields[key.lower()] = value
    return fields


def companion_path(header_path: PathLike) -> Path:
    """Binary file paired with a header: same stem, ``.f32`` suffix."""
    return Path(header_path).with_suffix(".f32")


def load_cube(header_path: PathLike) -> HsiCube:
    """Load a cube from its header and ``.f32`` companion.

    Raises
    ------
    FileNotFoundError
        If either file is missing.
    HsiFormatError
        On non-positive dimensions, a size mismatch or non-finite values.
    """
    header_path = Path(header_path)
    if not header_path.is_file():
        raise FileNotFoundError(header_path)
    fields = _read_header(header_path)
    try:
        rows, cols, bands = (int(fields[key]) for key in ("rows", "cols", "bands"))
    except KeyError as exc:
        raise HsiFormatError(f"{header_path}: missing header field {exc.args[0]!r}") from None
    except ValueError:
        raise HsiFormatError(f"{header_path}: dimensions must be integers") from None
    if min(rows, cols, bands) < 1:
        raise HsiFormatError(f"{header_path}: dimensions must be positive")

    data_path = header_path.parent / fields["data"] if "data" in fields else companion_path(header_path)
    if not data_path.is_file():
        raise FileNotFoundError(data_path)
    raw = np.fromfile(data_path, dtype="<f4")
    expected = rows * cols * bands
    if raw.size != expected or data_path.stat().st_size != 4 * expected:
        raise HsiFormatError(
            f"{data_path}: expected {expected} float32 values for {rows}x{cols}x{bands}, "
            f"found {data_path.stat().st_size / 4:g}"
        )
    if not np.all(np.isfinite(raw)):
        raise HsiFormatError(f"{data_path}: non-finite value encountered")
    return HsiCube(raw.astype(np.float64).reshape(rows, cols, bands))


def write_cube(cube: HsiCube, header_path: PathLike) -> Path:
    """Write ``cube`` as header + ``.f32`` companion; returns the binary path.

    Values are narrowed to float32.
    """
    header_path = Path(header_path)
    data_path = companion_path(header_path)
    header_path.write_text(f"rows={cube.rows}\ncols={cube.cols}\nbands={cube.bands}\n")
    cube.data.astype("<f4").tofile(data_path)
    return data_path


# ---------------------------------------------------------------------------
# label maps and graymaps


def _pgm_tokens(buf: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise HsiFormatError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos


def read_pgm(path: PathLike) -> np.ndarray:
    """Read a P5 or P2 graymap into a 2-D int64 array."""
    buf = Path(path).read_bytes()
    magic = buf[:2]
    if magic not in (b"P5", b"P2"):
        raise HsiFormatError(f"{path}: not a PGM file")
    (width, height, maxval), pos = _pgm_tokens(buf, 3, 2)
    width, height, maxval = int(width), int(height), int(maxval)
    if not (0 < maxval < 65536):
        raise HsiFormatError(f"{path}: invalid maxval {maxval}")
    if magic == b"P2":
        values = np.array(buf[pos:].split(), dtype=np.int64)
        if values.size != width * height:
            raise HsiFormatError(f"{path}: expected {width * height} values, found {values.size}")
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = buf[pos:]
        if len(body) != width * height * dtype.itemsize:
            raise HsiFormatError(f"{path}: raster size does not match {width}x{height}")
        values = np.frombuffer(body, dtype=dtype).astype(np.int64)
    return values.reshape(height, width)


def write_pgm(path: PathLike, image: np.ndarray, maxval: int = 255) -> None:
    """Write a 2-D nonnegative integer image as binary P5."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    maxval = max(int(maxval), int(image.max(initial=0)), 1)
    if image.min(initial=0) < 0 or maxval > 65535:
        raise ValueError("PGM values must lie in [0, 65535]")
    dtype = ">u2" if maxval > 255 else "u1"
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(image.astype(dtype).tobytes())


def load_labels(path: PathLike, rows: int, cols: int) -> LabelMap:
    """Load a label map stored as PGM or raw little-endian int32."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic in (b"P5", b"P2"):
        labels = read_pgm(path)
        if labels.shape != (rows, cols):
            raise HsiFormatError(f"{path}: shape {labels.shape} does not match ({rows}, {cols})")
    else:
        raw = np.fromfile(path, dtype="<i4")
        if path.stat().st_size != 4 * rows * cols:
            raise HsiFormatError(
                f"{path}: expected {rows * cols} int32 labels, file holds {path.stat().st_size / 4:g}"
            )
        labels = raw.reshape(rows, cols)
    if labels.min(initial=0) < 0:
        raise HsiFormatError(f"{path}: negative label")
    return LabelMap(labels)


def write_labels(label_map: LabelMap, path: PathLike) -> None:
    """Write a label map; ``.pgm`` paths get P5, anything else raw int32."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(path, label_map.labels, maxval=255)
    else:
        label_map.labels.astype("<i4").tofile(path)


# ---------------------------------------------------------------------------
# sample selection and result images


def select_samples(label_map: LabelMap) -> SampleIndex:
    """Collect every labeled pixel and re-code classes to 0..K-1.

    Classes are numbered in ascending order of their original label.
    """
    flat = label_map.labels.ravel()
    pixel_ids = np.flatnonzero(flat)
    if pixel_ids.size == 0:
        raise ValueError("label map contains only background")
    classes, truth = np.unique(flat[pixel_ids], return_inverse=True)
    return SampleIndex(pixel_ids=pixel_ids, truth=truth.astype(np.int64),
                       classes=classes, shape=label_map.shape)


def label_image(labels: np.ndarray, n_clusters: int, index: SampleIndex, shape=None) -> np.ndarray:
    """Gray-level image of a clustering; background stays 0."""
    shape = tuple(index.shape if shape is None else shape)
    labels = np.asarray(labels)
    if labels.shape != (len(index),):
        raise ValueError(f"{labels.shape[0]} labels for {len(index)} samples")
    if index.pixel_ids.size and index.pixel_ids[-1] >= shape[0] * shape[1]:
        raise ValueError(f"sample index does not fit image shape {shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_clusters):
        raise ValueError("cluster label out of range")
    image = np.zeros(shape[0] * shape[1], dtype=np.int64)
    image[index.pixel_ids] = (255 * (labels + 1)) // (n_clusters + 1)
    return image.reshape(shape)


def write_label_image(assignment, index: SampleIndex, path: PathLike, shape=None) -> None:
    """Write a clustering as a P5 graymap.

    Cluster ``c`` of ``K`` is drawn at gray level ``floor(255 (c+1) / (K+1))``.
    """
    write_pgm(path, label_image(assignment.labels, assignment.n_clusters, index, shape))


def affinity_image(Y: np.ndarray, order: Sequence[int] | None = None) -> np.ndarray:
    """Render an affinity matrix as 8-bit grays scaled by its maximum."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValueError(f"affinity must be square, got shape {Y.shape}")
    n = Y.shape[0]
    order = np.arange(n) if order is None else np.asarray(order)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError("order must be a permutation of 0..n-1")
    Y = Y[np.ix_(order, order)]
    top = Y.max(initial=0.0)
    if top <= 0:
        return np.zeros((n, n), dtype=np.int64)
    return np.floor(255.0 * np.clip(Y, 0, None) / top).astype(np.int64)


def write_affinity_heatmap(Y: np.ndarray, order, path: PathLike) -> None:
    """Write ``Y`` permuted by ``order`` as an n x n P5 graymap."""
    write_pgm(path, affinity_image(Y, order))


def write_report(path: PathLike, values: Mapping[str, object]) -> None:
    """Write flat ``key = value`` lines; floats get four decimals."""
    lines = []
    for key, value in values.items():
        if isinstance(value, (float, np.floating)):
            value = f"{value:.4f}"
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path: PathLike) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
