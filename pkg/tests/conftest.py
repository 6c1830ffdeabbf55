"""Shared test utilities: finite-difference oracles, data discovery,
synthetic dataset writers."""

import os
import struct
from pathlib import Path

import numpy as np

FD_STEP = 1e-6
FD_RTOL = 1e-5

MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)
CIFAR_FILES = ("data_batch_1.bin", "test_batch.bin")


def data_root() -> Path:
    return Path(os.environ.get("TNN_DATA_ROOT", "data"))


def mnist_dir():
    """MNIST directory if the canonical IDX files exist, else None."""
    d = data_root() / "mnist"
    if all((d / f).exists() for f in MNIST_FILES):
        return d
    return None


def cifar_dir():
    """CIFAR-10 binary directory if the canonical batches exist, else None."""
    d = data_root() / "cifar-10-batches-bin"
    if all((d / f).exists() for f in CIFAR_FILES):
        return d
    return None


def finite_difference(scalar_fn, x: np.ndarray, eps: float = FD_STEP) -> np.ndarray:
    """Central finite-difference gradient of ``scalar_fn()`` wrt array ``x``.

    ``x`` is perturbed in place entry by entry; ``scalar_fn`` must read it
    afresh on every call.
    """
    grad = np.zeros_like(x)
    flat_x = x.ravel()
    flat_g = grad.ravel()
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + eps
        f_plus = scalar_fn()
        flat_x[i] = orig - eps
        f_minus = scalar_fn()
        flat_x[i] = orig
        flat_g[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def rel_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """Max-norm relative disagreement, floored for near-zero references."""
    scale = max(float(np.abs(reference).max()), 1e-8)
    return float(np.abs(analytic - reference).max()) / scale


def assert_gradients_close(analytic, reference, rtol: float = FD_RTOL):
    err = rel_error(np.asarray(analytic), np.asarray(reference))
    assert err <= rtol, f"gradient mismatch: rel err {err:.3e} > {rtol:g}"


def write_idx_images(path, images: np.ndarray, magic: int = 0x00000803):
    count, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", magic, count, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels: np.ndarray, magic: int = 0x00000801):
    with open(path, "wb") as f:
        f.write(struct.pack(">ii", magic, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def make_synthetic_image_dataset(root: Path, side: int = 6, train: int = 120,
                                 test: int = 200, seed: int = 42) -> Path:
    """An MNIST-format directory of small class-structured images.

    Class ``c`` images are noise plus a bright band whose position
    encodes ``c``, so even small linear models separate them.
    """
    d = root / "mnist-syn"
    d.mkdir(parents=True, exist_ok=True)
    g = np.random.default_rng(seed)

    def build(count, offset):
        labels = np.arange(count) % 10
        images = g.integers(0, 60, size=(count, side, side))
        for idx, lab in enumerate(labels):
            row = lab % side
            col = (lab // side) * 2 % side
            images[idx, row, :] = 220
            images[idx, :, col] = np.maximum(images[idx, :, col], 160)
        return images.astype(np.uint8), labels.astype(np.uint8)

    tr_images, tr_labels = build(train, 0)
    te_images, te_labels = build(test, 1)
    write_idx_images(d / "train-images-idx3-ubyte", tr_images)
    write_idx_labels(d / "train-labels-idx1-ubyte", tr_labels)
    write_idx_images(d / "t10k-images-idx3-ubyte", te_images)
    write_idx_labels(d / "t10k-labels-idx1-ubyte", te_labels)
    return d


def read_csv_rows(path):
    import csv

    with open(path, newline="") as f:
        return list(csv.reader(f))


def metrics_match_except_seconds(path_a, path_b) -> bool:
    """Compare two metrics CSVs ignoring the wall-clock column."""
    rows_a, rows_b = read_csv_rows(path_a), read_csv_rows(path_b)
    if len(rows_a) != len(rows_b):
        return False
    seconds_col = rows_a[0].index("seconds")
    for ra, rb in zip(rows_a, rows_b):
        ka = [v for i, v in enumerate(ra) if i != seconds_col]
        kb = [v for i, v in enumerate(rb) if i != seconds_col]
        if ka != kb:
            return False
    return True
