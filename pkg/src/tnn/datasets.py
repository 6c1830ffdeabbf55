"""Dataset ingestion and synthetic data generation.

Samples live as lateral slices of an ``ell x m x n`` tensor (one sample
per index on axis 1).  Labels are 1-based class indices (file encodings
are 0-based and converted on load).

File formats, bit-exactly:

IDX (images, magic ``0x00000803``):
    big-endian ``int32`` magic, count, rows, cols, then ``rows*cols``
    unsigned bytes per image, row-major.
IDX (labels, magic ``0x00000801``):
    big-endian ``int32`` magic, count, then one unsigned byte per label.
CIFAR-10 binary:
    3073-byte records: 1 label byte then 3072 pixel bytes (3 channels x
    32 rows x 32 columns, channel-major).

Orientations:
    ``lateral``  -- images as ``rows x 1 x cols`` lateral slices
    (channels concatenated along the first axis for CIFAR, giving
    ``96 x 1 x 32``),
    ``vector``   -- images flattened to ``pixels x 1 x 1`` for the
    matrix-baseline pipeline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
CIFAR_RECORD_BYTES = 3073

MNIST_MEAN = 0.1307
MNIST_STD = 0.3081
CIFAR_MEANS = (0.4914, 0.4822, 0.4465)
CIFAR_STDS = (0.2023, 0.1994, 0.2010)

SPHERE_RADII = (3.5, 5.5)
SPHERE_STD = 3.0
SPHERE_COUNTS = (317, 466, 417)


class BadMagicError(ValueError):
    """An IDX or checkpoint file starts with the wrong magic number."""


class TruncatedFileError(ValueError):
    """A data file ends before its declared payload."""


class CountMismatchError(ValueError):
    """Image and label files disagree on the sample count."""


class LabelOutOfRangeError(ValueError):
    """A label byte falls outside the valid class range."""


@dataclass
class NormalizationSpec:
    """Per-channel means and standard deviations (stds must be positive)."""

    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        if any(s <= 0 for s in self.stds):
            raise ValueError("standard deviations must be positive")


@dataclass
class Dataset:
    """Samples as lateral slices plus 1-based integer labels."""

    samples: np.ndarray          # ell x m x n
    labels: np.ndarray           # length m, values in 1..num_classes
    num_classes: int
    split: str = ""
    normalization: NormalizationSpec | None = None

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    def subset(self, count: int, split: str | None = None) -> "Dataset":
        """The first ``count`` samples (deterministic, order-preserving)."""
        return Dataset(
            samples=np.ascontiguousarray(self.samples[:, :count, :]),
            labels=self.labels[:count],
            num_classes=self.num_classes,
            split=split if split is not None else self.split,
            normalization=self.normalization,
        )


@dataclass
class Batch:
    samples: np.ndarray
    labels: np.ndarray


def _read_be_i32(f, path) -> int:
    raw = f.read(4)
    if len(raw) != 4:
        raise TruncatedFileError(f"{path}: unexpected end of header")
    return struct.unpack(">i", raw)[0]


def _read_idx_images(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_be_i32(f, path)
        if magic != IMAGE_MAGIC:
            raise BadMagicError(f"{path}: magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")
        count = _read_be_i32(f, path)
        rows = _read_be_i32(f, path)
        cols = _read_be_i32(f, path)
        payload = f.read(count * rows * cols)
        if len(payload) != count * rows * cols:
            raise TruncatedFileError(
                f"{path}: expected {count * rows * cols} pixel bytes, got {len(payload)}"
            )
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)


def _read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_be_i32(f, path)
        if magic != LABEL_MAGIC:
            raise BadMagicError(f"{path}: magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")
        count = _read_be_i32(f, path)
        payload = f.read(count)
        if len(payload) != count:
            raise TruncatedFileError(
                f"{path}: expected {count} label bytes, got {len(payload)}"
            )
    return np.frombuffer(payload, dtype=np.uint8)


def load_mnist(images_path, labels_path, mean: float = MNIST_MEAN,
               std: float = MNIST_STD, orientation: str = "lateral",
               split: str = "") -> Dataset:
    """Load an IDX image/label pair as a normalized dataset.

    Pixels are scaled to [0, 1] then standardized with ``mean``/``std``.
    ``lateral`` orientation stores each image as a ``rows x 1 x cols``
    lateral slice (image rows along axis 0, columns along axis 2);
    ``vector`` flattens to ``(rows*cols) x 1 x 1``.
    """
    images = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images.shape[0]} images vs {labels.shape[0]} labels"
        )
    norm = NormalizationSpec(means=(mean,), stds=(std,))
    pixels = (images.astype(np.float64) / 255.0 - mean) / std
    if orientation == "lateral":
        samples = np.ascontiguousarray(pixels.transpose(1, 0, 2))
    elif orientation == "vector":
        samples = pixels.reshape(pixels.shape[0], -1).T[:, :, None]
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return Dataset(samples=samples, labels=labels.astype(np.int64) + 1,
                   num_classes=10, split=split, normalization=norm)


def load_cifar10(batch_paths, means=CIFAR_MEANS, stds=CIFAR_STDS,
                 orientation: str = "lateral", split: str = "") -> Dataset:
    """Load CIFAR-10 binary batches as a normalized dataset.

    ``lateral`` orientation concatenates the three channel images along
    the first axis (``96 x 1 x 32`` per sample); ``vector`` flattens to
    ``3072 x 1 x 1``.
    """
    if isinstance(batch_paths, (str, bytes)) or hasattr(batch_paths, "__fspath__"):
        batch_paths = [batch_paths]
    records = []
    labels = []
    for path in batch_paths:
        with open(path, "rb") as f:
            raw = f.read()
        if len(raw) % CIFAR_RECORD_BYTES:
            raise TruncatedFileError(
                f"{path}: {len(raw)} bytes is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        data = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        if data.shape[0] and data[:, 0].max() > 9:
            raise LabelOutOfRangeError(
                f"{path}: label byte {data[:, 0].max()} out of range 0..9"
            )
        labels.append(data[:, 0])
        records.append(data[:, 1:])
    pixels = np.concatenate(records).reshape(-1, 3, 32, 32).astype(np.float64) / 255.0
    norm = NormalizationSpec(means=tuple(means), stds=tuple(stds))
    for c in range(3):
        pixels[:, c] = (pixels[:, c] - norm.means[c]) / norm.stds[c]
    if orientation == "lateral":
        # channels stacked along axis 0: 96 x m x 32
        samples = np.ascontiguousarray(
            pixels.reshape(-1, 96, 32).transpose(1, 0, 2)
        )
    elif orientation == "vector":
        samples = pixels.reshape(pixels.shape[0], -1).T[:, :, None]
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return Dataset(samples=samples, labels=np.concatenate(labels).astype(np.int64) + 1,
                   num_classes=10, split=split, normalization=norm)


def denormalize(dataset: Dataset) -> np.ndarray:
    """Invert the load-time standardization, returning raw [0, 1] pixels.

    Supports the single-channel layout and the 3-channel lateral layout
    (rows grouped by channel).
    """
    norm = dataset.normalization
    if norm is None:
        raise ValueError("dataset carries no normalization spec")
    out = dataset.samples.copy()
    n_ch = len(norm.means)
    if n_ch == 1:
        return out * norm.stds[0] + norm.means[0]
    rows_per_channel = out.shape[0] // n_ch
    for c in range(n_ch):
        block = slice(c * rows_per_channel, (c + 1) * rows_per_channel)
        out[block] = out[block] * norm.stds[c] + norm.means[c]
    return out


def sphere_label(point, radii=SPHERE_RADII) -> int:
    """Radius class of a point in R^3: 1 inside ``radii[0]``, 2 inside
    ``radii[1]``, 3 outside both."""
    r = float(np.linalg.norm(point))
    if r < radii[0]:
        return 1
    return 2 if r < radii[1] else 3


def gen_spheres(seed: int, counts=SPHERE_COUNTS, std: float = SPHERE_STD,
                radii=SPHERE_RADII, split: str = "train") -> Dataset:
    """Synthetic three-class shells in R^3, stored as ``1 x m x 3`` tubes.

    Points are drawn i.i.d. Gaussian (mean 0, per-coordinate std
    ``std``) from ``numpy.random.Generator(PCG64(seed))`` via
    ``standard_normal`` (ziggurat), and rejection-sampled until each
    radius class holds exactly its requested count: class 1 inside
    ``radii[0]``, class 2 inside ``radii[1]``, class 3 outside.  The
    generator and method are pinned so runs reproduce bit-for-bit.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    need = list(counts)
    total = sum(counts)
    points = np.empty((total, 3))
    labels = np.empty(total, dtype=np.int64)
    filled = 0
    while filled < total:
        draw = rng.standard_normal(3) * std
        cls = sphere_label(draw, radii)
        if need[cls - 1] > 0:
            need[cls - 1] -= 1
            points[filled] = draw
            labels[filled] = cls
            filled += 1
    samples = np.ascontiguousarray(points[None, :, :])
    return Dataset(samples=samples, labels=labels, num_classes=3, split=split)


def batches(dataset: Dataset, batch_size: int, rng: np.random.Generator):
    """Deterministic shuffled minibatches; the short tail batch is kept."""
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    order = rng.permutation(dataset.num_samples)
    for start in range(0, dataset.num_samples, batch_size):
        sel = order[start:start + batch_size]
        yield Batch(samples=np.ascontiguousarray(dataset.samples[:, sel, :]),
                    labels=dataset.labels[sel])
