"""Mode-3 transforms that select the tensor-tensor algebra.

Three kinds are supported:

* ``circulant`` -- the classic t-product algebra.  Products are circulant
  convolutions along mode 3.  Any frequency-domain work stays internal;
  every input and output crossing the API boundary is real.
* ``orthogonal`` -- an explicit orthogonal matrix ``M`` (default: the
  orthonormal DCT-II), giving the M-product algebra.
* ``identity`` -- ``M = I``; the product degenerates to the facewise
  product, and for ``n = 1`` to plain matrix algebra.

Only these kinds are trainable here; general invertible (non-orthogonal)
transforms are out of scope because their backward rules lose the
transpose symmetry the layer code relies on.
"""

from __future__ import annotations

import numpy as np

ORTHOGONALITY_TOL = 1e-10


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, built from the explicit cosine formula.

    ``M[k, t] = c_k * cos(pi * (2t + 1) * k / (2n))`` with
    ``c_0 = sqrt(1/n)`` and ``c_k = sqrt(2/n)`` otherwise.
    """
    k = np.arange(n)[:, None]
    t = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * t + 1) * k / (2 * n))
    m[0, :] *= np.sqrt(1.0 / n)
    m[1:, :] *= np.sqrt(2.0 / n)
    return m


class Transform:
    """An invertible mode-3 transform plus the product algebra it induces.

    Instances are immutable.  Use the factory classmethods
    :meth:`circulant`, :meth:`orthogonal`, :meth:`dct` and
    :meth:`identity`.

    Attributes
    ----------
    kind : str
        One of ``"circulant"``, ``"orthogonal"``, ``"identity"``.
    n : int
        Tube length the transform applies to.
    matrix, matrix_inv : numpy.ndarray or None
        ``M`` and ``M^-1 = M^T``; ``None`` for the circulant kind, whose
        frequency representation never escapes this module.
    t_product_path : str
        For the circulant kind only: ``"direct"`` computes products by
        real circulant convolution, ``"fft"`` uses an internal
        frequency-domain fast path.  Both agree to 1e-10.
    """

    __slots__ = ("kind", "n", "matrix", "matrix_inv", "t_product_path")

    def __init__(self, kind: str, n: int, matrix=None, t_product_path: str = "direct"):
        if kind not in ("circulant", "orthogonal", "identity"):
            raise ValueError(f"unknown transform kind {kind!r}")
        if n < 1:
            raise ValueError("tube length must be >= 1")
        if t_product_path not in ("direct", "fft"):
            raise ValueError(f"unknown t-product path {t_product_path!r}")
        self.kind = kind
        self.n = n
        self.t_product_path = t_product_path
        if kind == "orthogonal":
            m = np.asarray(matrix, dtype=np.float64)
            if m.shape != (n, n):
                raise ValueError(f"transform matrix must be {n}x{n}, got {m.shape}")
            err = np.abs(m @ m.T - np.eye(n)).max()
            if err > ORTHOGONALITY_TOL:
                raise ValueError(
                    f"matrix is not orthogonal: max |M M^T - I| = {err:.3e}"
                )
            self.matrix = m
            self.matrix_inv = np.ascontiguousarray(m.T)
        elif kind == "identity":
            self.matrix = np.eye(n)
            self.matrix_inv = np.eye(n)
        else:
            self.matrix = None
            self.matrix_inv = None

    @classmethod
    def circulant(cls, n: int, t_product_path: str = "direct") -> "Transform":
        """The t-product algebra on tubes of length ``n``."""
        return cls("circulant", n, t_product_path=t_product_path)

    @classmethod
    def orthogonal(cls, matrix) -> "Transform":
        """The M-product algebra for an explicit orthogonal ``matrix``."""
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls("orthogonal", matrix.shape[0], matrix=matrix)

    @classmethod
    def dct(cls, n: int) -> "Transform":
        """The M-product algebra under the orthonormal DCT-II."""
        return cls("orthogonal", n, matrix=dct_matrix(n))

    @classmethod
    def identity(cls, n: int) -> "Transform":
        """The facewise-product algebra (``M = I``)."""
        return cls("identity", n)

    def __repr__(self) -> str:
        return f"Transform(kind={self.kind!r}, n={self.n})"

    # -- internal transform-domain hops ------------------------------------
    # The circulant kind uses the real FFT; complex values never leave the
    # calling functions in algebra.py / loss.py.

    def to_transform(self, a: np.ndarray) -> np.ndarray:
        """Mode-3 hop into the transform domain (complex for circulant)."""
        if self.kind == "circulant":
            return np.fft.fft(a, axis=-1)
        return np.tensordot(a, self.matrix, axes=([a.ndim - 1], [1]))

    def from_transform(self, a_hat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """Mode-3 hop back to the spatial domain, guaranteed real.

        For the circulant kind the imaginary residue must stay below
        ``tol`` relative to the value scale.
        """
        if self.kind == "circulant":
            a = np.fft.ifft(a_hat, axis=-1)
            scale = max(1.0, np.abs(a.real).max()) if a.size else 1.0
            if np.abs(a.imag).max(initial=0.0) > tol * scale:
                raise ValueError(
                    "frequency-domain result does not round-trip to real"
                )
            return np.ascontiguousarray(a.real)
        return np.tensordot(a_hat, self.matrix_inv, axes=([a_hat.ndim - 1], [1]))
