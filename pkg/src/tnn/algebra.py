"""Tensor-tensor products, transposes, tube algebra and spectral checks.

All operations take a :class:`~tnn.transforms.Transform` that selects the
algebra.  The circulant kind is the t-product; orthogonal/identity kinds
are M-products.  ``product`` and ``transpose`` dispatch on the kind so
layer code can stay algebra-agnostic.

Summation order: every contraction runs as a single fixed-order
tensordot/einsum (no data-dependent reduction trees), so results are
bit-reproducible on one machine.
"""

from __future__ import annotations

import numpy as np

from .tensor import MATERIALIZE_CAP, bcirc, circ, facewise_product, mode3_product
from .transforms import Transform


class SingularTubeError(ValueError):
    """A tube has a transform-domain coefficient too close to zero."""


TUBE_SINGULARITY_TOL = 1e-12  # ~100x double eps against unit-scale data


def _check_conformable(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 3 or b.ndim != 3:
        raise ValueError("operands must be third-order tensors")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions do not match: {a.shape} * {b.shape}")
    if a.shape[2] != b.shape[2]:
        raise ValueError(f"tube lengths do not match: {a.shape[2]} vs {b.shape[2]}")


def t_product(a: np.ndarray, b: np.ndarray, path: str = "direct") -> np.ndarray:
    """The t-product ``a * b`` (circulant convolution along mode 3).

    ``path="direct"`` sums shifted slice products in real arithmetic;
    ``path="fft"`` multiplies slicewise in the frequency domain.  The two
    agree to 1e-10 and the choice is a performance knob.
    """
    _check_conformable(a, b)
    n = a.shape[2]
    if path == "fft":
        a_hat = np.fft.rfft(a, axis=2)
        b_hat = np.fft.rfft(b, axis=2)
        c_hat = np.matmul(a_hat.transpose(2, 0, 1), b_hat.transpose(2, 0, 1))
        return np.ascontiguousarray(
            np.fft.irfft(c_hat.transpose(1, 2, 0), n=n, axis=2)
        )
    if path != "direct":
        raise ValueError(f"unknown t-product path {path!r}")
    if a.shape[0] == 1 and a.shape[1] == 1:
        # tube times tensor: one circulant acting on every tube of b
        return np.tensordot(b, circ(a[0, 0]), axes=([2], [1]))
    if b.shape[0] == 1 and b.shape[1] == 1:
        # tensor times tube: the tube's circulant acts on every tube of a
        return np.tensordot(a, circ(b[0, 0]), axes=([2], [1]))
    # gather the cyclic shifts of b once, then contract in a single pass;
    # costs an n-fold copy of b, which the fft path avoids for large n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    gathered = b[:, :, idx]
    return np.einsum("ipa,pjka->ijk", a, gathered)


def t_transpose(a: np.ndarray) -> np.ndarray:
    """Transpose every frontal slice and reverse the order of slices 2..n.

    The reversal makes ``bcirc(t_transpose(a)) == bcirc(a).T``.
    """
    out = np.empty((a.shape[1], a.shape[0], a.shape[2]))
    out[:, :, 0] = a[:, :, 0].T
    if a.shape[2] > 1:
        out[:, :, 1:] = a[:, :, :0:-1].transpose(1, 0, 2)
    return out


def t_identity(m: int, n: int) -> np.ndarray:
    """Identity tensor of the t-product: first frontal slice ``I``, rest 0."""
    out = np.zeros((m, m, n))
    out[:, :, 0] = np.eye(m)
    return out


def m_product(a: np.ndarray, b: np.ndarray, transform: Transform) -> np.ndarray:
    """Product in the algebra selected by ``transform``.

    Identity kind: facewise product.  Orthogonal kind: transform mode 3,
    multiply facewise, transform back.  Circulant kind routes to
    :func:`t_product`.
    """
    if transform.kind == "circulant":
        return t_product(a, b, path=transform.t_product_path)
    _check_conformable(a, b)
    if transform.kind == "identity":
        return facewise_product(a, b)
    a_hat = mode3_product(a, transform.matrix)
    b_hat = mode3_product(b, transform.matrix)
    return mode3_product(facewise_product(a_hat, b_hat), transform.matrix_inv)


def m_transpose(a: np.ndarray) -> np.ndarray:
    """Frontal-slice-wise transpose (no slice reordering)."""
    return np.ascontiguousarray(a.transpose(1, 0, 2))


def m_identity(m: int, n: int, transform: Transform) -> np.ndarray:
    """Multiplicative identity tensor of the selected algebra."""
    if transform.kind == "circulant":
        return t_identity(m, n)
    # identity in every transform-domain slice, hopped back
    eye = np.zeros((m, m, n))
    eye[np.arange(m), np.arange(m), :] = 1.0
    if transform.kind == "identity":
        return eye
    return mode3_product(eye, transform.matrix_inv)


def product(a: np.ndarray, b: np.ndarray, transform: Transform) -> np.ndarray:
    """Algebra-dispatching product (alias of :func:`m_product`)."""
    return m_product(a, b, transform)


def transpose(a: np.ndarray, transform: Transform) -> np.ndarray:
    """Algebra-dispatching transpose.

    Circulant kind uses :func:`t_transpose` (slice reversal); orthogonal
    and identity kinds use :func:`m_transpose`.
    """
    if transform.kind == "circulant":
        return t_transpose(a)
    return m_transpose(a)


# -- tube (scalar) algebra --------------------------------------------------

def _as_tube(a) -> np.ndarray:
    t = np.asarray(a, dtype=np.float64).reshape(-1)
    if t.size < 1:
        raise ValueError("empty tube")
    return t


def tube_mult(a, b, transform: Transform) -> np.ndarray:
    """Multiply two tubes, the scalars of the algebra.

    Circulant kind: circulant convolution (``circ(a) @ b``); orthogonal
    kinds: elementwise multiply in the transform domain.
    """
    ta, tb = _as_tube(a), _as_tube(b)
    if ta.shape != tb.shape:
        raise ValueError(f"tube lengths differ: {ta.shape[0]} vs {tb.shape[0]}")
    prod = transform.to_transform(ta) * transform.to_transform(tb)
    if transform.kind == "circulant":
        return np.fft.ifft(prod).real
    return transform.from_transform(prod)


def identity_tube(transform: Transform) -> np.ndarray:
    """The multiplicative unit tube of the algebra (all-ones spectrum)."""
    if transform.kind == "circulant":
        e = np.zeros(transform.n)
        e[0] = 1.0
        return e
    return transform.from_transform(np.ones(transform.n))


def tube_inverse(a, transform: Transform) -> np.ndarray:
    """Multiplicative inverse of a tube.

    Raises :class:`SingularTubeError` when any transform-domain
    coefficient has magnitude below ``TUBE_SINGULARITY_TOL``.
    """
    ta = _as_tube(a)
    coeff = transform.to_transform(ta)
    small = np.abs(coeff) <= TUBE_SINGULARITY_TOL
    if small.any():
        raise SingularTubeError(
            f"tube has {int(small.sum())} transform coefficient(s) below "
            f"{TUBE_SINGULARITY_TOL:g}"
        )
    inv = 1.0 / coeff
    if transform.kind == "circulant":
        return np.fft.ifft(inv).real
    return transform.from_transform(inv)


def tubal_apply(phi, a: np.ndarray, transform: Transform) -> np.ndarray:
    """Apply a scalar function tube-wise: elementwise in the transform domain.

    ``phi`` must accept the transform-domain array (complex for the
    circulant kind, where it is evaluated on the FFT coefficients).
    """
    a_hat = transform.to_transform(a)
    return transform.from_transform(phi(a_hat))


# -- spectral diagnostics ----------------------------------------------------

def bcirc_spectrum(w: np.ndarray, cap: int = MATERIALIZE_CAP) -> np.ndarray:
    """Eigenvalues of the materialized ``bcirc(w)`` (offline diagnostic).

    ``w`` must be square in its first two dimensions.  Raises
    ``ValueError`` when the materialized matrix would exceed ``cap``
    entries.
    """
    ell, m, n = w.shape
    if ell != m:
        raise ValueError(f"weight tensor must be square in dims 1-2, got {w.shape}")
    if (ell * n) ** 2 > cap:
        raise ValueError(
            f"bcirc would have {(ell * n) ** 2} entries (cap {cap}); refusing"
        )
    return np.linalg.eigvals(bcirc(w))


def antisymmetric_spectrum(w: np.ndarray, cap: int = MATERIALIZE_CAP) -> np.ndarray:
    """Eigenvalues of ``[[0, bcirc(w)], [-bcirc(w)^T, 0]]``.

    This is the forward-propagation matrix of the conservative two-field
    system; antisymmetry forces a purely imaginary spectrum.
    """
    ell, m, n = w.shape
    if ell != m:
        raise ValueError(f"weight tensor must be square in dims 1-2, got {w.shape}")
    size = 2 * ell * n
    if size * size > cap:
        raise ValueError(
            f"assembled system would have {size * size} entries (cap {cap}); refusing"
        )
    c = bcirc(w)
    block = np.zeros((size, size))
    half = ell * n
    block[:half, half:] = c
    block[half:, :half] = -c.T
    return np.linalg.eigvals(block)


__all__ = [
    "SingularTubeError",
    "TUBE_SINGULARITY_TOL",
    "antisymmetric_spectrum",
    "bcirc_spectrum",
    "circ",
    "identity_tube",
    "m_identity",
    "m_product",
    "m_transpose",
    "product",
    "t_identity",
    "t_product",
    "t_transpose",
    "transpose",
    "tubal_apply",
    "tube_inverse",
    "tube_mult",
]
