"""Dataset construction and IO: synthetic mixtures, CSV, and PGM images."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as _rng
from .errors import DataFormatError, ParameterError
from .matrix import as_matrix


@dataclass
class Dataset:
    """Points (n x d), optional integer class labels, and a source note."""

    points: np.ndarray
    labels: np.ndarray | None
    source: str

    def __post_init__(self):
        self.points = as_matrix(self.points)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.points.shape[0],):
                raise ParameterError("labels must be one integer per row")
            k = int(self.labels.max()) + 1
            if self.labels.min() < 0 or len(np.unique(self.labels)) != k:
                raise ParameterError(
                    "labels must cover a contiguous range starting at 0"
                )

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass
class MixtureSpec:
    """A seeded Gaussian mixture: k centers, isotropic noise, n points."""

    n: int
    d: int
    k: int
    center_scale: float = 1.0
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError("d must be at least 1")
        if not 1 <= self.k <= self.n:
            raise ParameterError("need 1 <= k <= n")
        if self.center_scale < 0 or self.noise_sigma < 0:
            raise ParameterError("scales must be nonnegative")


def generate_mixture(spec: MixtureSpec) -> Dataset:
    """Draw the mixture: point i belongs to cluster i mod k, so the class
    sizes are balanced to within one point."""
    centers = _rng.stream(spec.seed, _rng.MIXTURE_CENTERS).standard_normal(
        (spec.k, spec.d)
    ) * spec.center_scale
    labels = np.arange(spec.n, dtype=np.int64) % spec.k
    noise = _rng.stream(spec.seed, _rng.MIXTURE_NOISE).standard_normal(
        (spec.n, spec.d)
    ) * spec.noise_sigma
    points = centers[labels] + noise
    return Dataset(
        points=points,
        labels=labels,
        source=f"mixture(n={spec.n},d={spec.d},k={spec.k},"
               f"center_scale={spec.center_scale!r},"
               f"noise_sigma={spec.noise_sigma!r},seed={spec.seed})",
    )


def write_csv(dataset: Dataset, path) -> None:
    """Write points (and labels, when present) with a header row.

    Floats are written with repr, which round-trips float64 exactly.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{j}" for j in range(dataset.d)]
        if dataset.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(v) for v in dataset.points[i].tolist()]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            writer.writerow(row)


def _parse_cell(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(
            f"row {row}, column {col}: {text!r} is not a number"
        ) from None
    if not math.isfinite(value):
        raise DataFormatError(f"row {row}, column {col}: {text!r} is not finite")
    return value


def read_csv(path) -> Dataset:
    """Read a numeric CSV, with or without a header row.

    The first row counts as a header when any of its cells fails to parse
    as a number.  A final column named "label" becomes integer class
    labels.  Ragged rows and non-numeric cells raise DataFormatError with
    their position; a missing file raises FileNotFoundError.
    """
    path = Path(path)
    with path.open("r", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataFormatError(f"{path}: no rows")
    header = None
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        header = rows[0]
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path}: header but no data rows")
    has_label = header is not None and header[-1].strip().lower() == "label"
    width = len(rows[0]) if header is None else len(header)
    points = []
    labels = [] if has_label else None
    for i, row in enumerate(rows):
        line = i + (2 if header is not None else 1)
        if len(row) != width:
            raise DataFormatError(
                f"row {line}: expected {width} cells, found {len(row)}"
            )
        cells = row[:-1] if has_label else row
        points.append([_parse_cell(cell, line, j + 1)
                       for j, cell in enumerate(cells)])
        if has_label:
            value = _parse_cell(row[-1], line, width)
            if value != int(value):
                raise DataFormatError(f"row {line}: label must be an integer")
            labels.append(int(value))
    return Dataset(
        points=np.array(points, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64) if has_label else None,
        source=str(path),
    )


def _read_pgm(path) -> np.ndarray:
    """Parse one binary (P5) PGM file into an h x w float array of 0..255."""
    data = Path(path).read_bytes()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataFormatError(f"{path}: truncated header")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise DataFormatError(
            f"{path}: unsupported magic number {magic!r} (want binary P5)"
        )
    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError:
        raise DataFormatError(f"{path}: non-numeric header field") from None
    if width < 1 or height < 1:
        raise DataFormatError(f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise DataFormatError(
            f"{path}: maxval {maxval} unsupported (8-bit only)"
        )
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:]
    if len(raster) != width * height:
        raise DataFormatError(
            f"{path}: raster has {len(raster)} bytes, expected {width * height}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    return pixels.reshape(height, width)


def load_image_dir(path, expected_size=None) -> Dataset:
    """Load a directory of grayscale PGM images as flattened rows.

    Each subdirectory is one class; classes are labeled 0, 1, ... in
    lexicographic subdirectory order, and files are read in lexicographic
    order within each class.  All images must share one size (and match
    expected_size = (height, width) when given).
    """
    root = Path(path)
    if not root.is_dir():
        raise DataFormatError(f"{root}: not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataFormatError(f"{root}: no class subdirectories")
    rows = []
    labels = []
    size = tuple(expected_size) if expected_size is not None else None
    for label, class_dir in enumerate(class_dirs):
        files = sorted(p for p in class_dir.iterdir()
                       if p.is_file() and not p.name.startswith("."))
        if not files:
            raise DataFormatError(f"{class_dir}: class directory is empty")
        for file in files:
            img = _read_pgm(file)
            if size is None:
                size = img.shape
            elif img.shape != size:
                raise DataFormatError(
                    f"{file}: size {img.shape} does not match {size}"
                )
            rows.append(img.reshape(-1))
            labels.append(label)
    return Dataset(
        points=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        source=str(root),
    )
