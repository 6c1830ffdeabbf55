"""Dense third-order tensor primitives.

A third-order tensor of shape ``ell x m x n`` is stored as a C-ordered
``numpy.ndarray`` with ``dtype=float64``.  Axis conventions used throughout
the package:

* axis 0 (``ell``): row / feature dimension,
* axis 1 (``m``): lateral / sample dimension,
* axis 2 (``n``): tube dimension (mode 3).

C order makes tubes ``A[i, j, :]`` contiguous, which favours the
transform-domain loops that dominate the workload; extracting a frontal
slice ``A[:, :, k]`` pays a stride cost instead.

Index convention: user-facing documentation counts slices from 1 (frontal
slices ``A^(1) .. A^(n)``); all code indices are 0-based.  The mapping is
``A^(k) == A[:, :, k - 1]``.

Structural views
----------------
frontal slice   ``A[:, :, k]``  -- an ``ell x m`` matrix
lateral slice   ``A[:, j, :]``  -- an ``ell x n`` matrix (one sample)
tube            ``A[i, j, :]``  -- a length-``n`` vector (one scalar of
the tubal algebra)

``bcirc`` and the Kronecker materialization exist for tests and offline
diagnostics only; they refuse to build matrices above ``MATERIALIZE_CAP``
entries.
"""

from __future__ import annotations

import numpy as np

# Materialized block matrices (bcirc, Kronecker forms) are test/diagnostic
# oracles; refuse anything above this entry count.
MATERIALIZE_CAP = 1_000_000


def as_tensor(values) -> np.ndarray:
    """Coerce ``values`` to a float64 third-order tensor.

    Raises ``ValueError`` if the input is not 3-dimensional or any
    dimension is empty.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected a 3-d array, got ndim={a.ndim}")
    if min(a.shape) < 1:
        raise ValueError(f"all dimensions must be >= 1, got shape {a.shape}")
    return a


def frontal_slice(a: np.ndarray, k: int) -> np.ndarray:
    """The ``ell x m`` frontal slice at 0-based index ``k``."""
    return a[:, :, k]


def lateral_slice(a: np.ndarray, j: int) -> np.ndarray:
    """The ``ell x n`` lateral slice at 0-based index ``j``."""
    return a[:, j, :]


def tube(a: np.ndarray, i: int, j: int) -> np.ndarray:
    """The length-``n`` tube at 0-based position ``(i, j)``."""
    return a[i, j, :]


def unfold(a: np.ndarray) -> np.ndarray:
    """Stack frontal slices vertically into an ``(ell*n) x m`` matrix.

    The first frontal slice sits on top.
    """
    ell, m, n = a.shape
    return a.transpose(2, 0, 1).reshape(ell * n, m)


def fold(u: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold` for target shape ``dims``."""
    ell, m, n = dims
    if u.shape != (ell * n, m):
        raise ValueError(f"cannot fold {u.shape} into {dims}: need ({ell * n}, {m})")
    return np.ascontiguousarray(u.reshape(n, ell, m).transpose(1, 2, 0))


def unfold3(a: np.ndarray) -> np.ndarray:
    """Arrange all tubes as columns of an ``n x (ell*m)`` matrix.

    Column ordering is fixed as lateral-index-major: the tube at position
    ``(i, j)`` lands in column ``j*ell + i``.  Only internal consistency
    depends on this choice; it is documented here and kept stable.
    """
    ell, m, n = a.shape
    return np.ascontiguousarray(a.transpose(1, 0, 2).reshape(m * ell, n).T)


def fold3(u: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold3` for target shape ``dims``."""
    ell, m, n = dims
    if u.shape != (n, ell * m):
        raise ValueError(f"cannot fold3 {u.shape} into {dims}: need ({n}, {ell * m})")
    return np.ascontiguousarray(u.T.reshape(m, ell, n).transpose(1, 0, 2))


def _check_cap(entries: int, what: str) -> None:
    if entries > MATERIALIZE_CAP:
        raise ValueError(
            f"{what} would materialize {entries} entries "
            f"(cap {MATERIALIZE_CAP}); refusing"
        )


def bcirc(a: np.ndarray) -> np.ndarray:
    """Materialize the ``(ell*n) x (m*n)`` block-circulant matrix of ``a``.

    Block ``(r, c)`` equals the frontal slice with 0-based index
    ``(r - c) mod n``.  Test/diagnostic oracle only; see module docstring.
    """
    ell, m, n = a.shape
    _check_cap(ell * n * m * n, "bcirc")
    out = np.empty((ell * n, m * n))
    for r in range(n):
        for c in range(n):
            out[r * ell:(r + 1) * ell, c * m:(c + 1) * m] = a[:, :, (r - c) % n]
    return out


def circ(a: np.ndarray) -> np.ndarray:
    """The ``n x n`` circulant matrix whose first column is the tube ``a``."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    n = a.shape[0]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return a[idx]


def mode3_product(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Apply the matrix ``m`` to every tube of ``a`` (mode-3 product).

    ``m`` must be ``n x n`` where ``n = a.shape[2]``.
    """
    n = a.shape[2]
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (n, n):
        raise ValueError(f"transform must be {n}x{n}, got {m.shape}")
    # result[i, j, k] = sum_t m[k, t] * a[i, j, t]
    return np.tensordot(a, m, axes=([2], [1]))


def facewise_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Multiply corresponding frontal slices: ``C^(k) = A^(k) @ B^(k)``."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"inner dimensions do not match: {a.shape} x {b.shape}"
        )
    if a.shape[2] != b.shape[2]:
        raise ValueError(
            f"tube lengths do not match: {a.shape[2]} vs {b.shape[2]}"
        )
    out = np.matmul(a.transpose(2, 0, 1), b.transpose(2, 0, 1))
    return np.ascontiguousarray(out.transpose(1, 2, 0))


def bdiag(a: np.ndarray) -> np.ndarray:
    """Block-diagonal matrix of frontal slices (test oracle, capped)."""
    ell, m, n = a.shape
    _check_cap(ell * n * m * n, "bdiag")
    out = np.zeros((ell * n, m * n))
    for k in range(n):
        out[k * ell:(k + 1) * ell, k * m:(k + 1) * m] = a[:, :, k]
    return out
