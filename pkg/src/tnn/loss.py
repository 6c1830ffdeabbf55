"""Tubal softmax, cross-entropy, their exact gradient, and SGD.

The classifier output ``X`` is a ``p x m x n`` tensor.  The tubal softmax
applies the classical vector softmax independently in every
transform-domain slice; summing the resulting tubes along mode 3 yields a
``p x m`` matrix of class scores.  Under the circulant algebra those
column sums are exactly 1; under other transforms a safeguard clamps
negatives and renormalizes columns, recording the pre-safeguard residual
so its activity stays observable.

``cross_entropy`` uses sum reduction by default.  When training with
minibatches, pass ``reduction="mean"`` (or scale the learning rate by the
batch size): the gradient magnitude is proportional to the number of
samples under sum reduction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .transforms import Transform

log = logging.getLogger(__name__)

DEGENERATE_COLUMN_TOL = 1e-8
PROBABILITY_FLOOR = 1e-15


class DegenerateColumnError(ValueError):
    """A pre-normalization column sum collapsed below tolerance."""


@dataclass
class ProbabilityMatrix:
    """Class probabilities per sample plus safeguard diagnostics.

    ``values`` is ``p x m`` with non-negative entries and unit column
    sums (after the safeguard).  ``residual[i]`` is the pre-safeguard
    deviation ``|colsum_i - 1|``; ``clamped`` counts entries the
    safeguard clipped to zero.
    """

    values: np.ndarray
    residual: np.ndarray = field(default=None)
    clamped: int = 0

    def __post_init__(self):
        if self.residual is None:
            self.residual = np.zeros(self.values.shape[1])

    @property
    def num_classes(self) -> int:
        return self.values.shape[0]

    def predictions(self) -> np.ndarray:
        """1-based argmax per column; ties resolve to the lowest class."""
        return np.argmax(self.values, axis=0) + 1


def _slicewise_softmax(x_hat: np.ndarray) -> np.ndarray:
    """Vector softmax over axis 0, separately per sample and slice.

    Works for real and complex inputs; the shift uses the real part so
    exponent magnitudes stay bounded (a constant shift cancels exactly).
    """
    shift = x_hat.real.max(axis=0, keepdims=True)
    e = np.exp(x_hat - shift)
    return e / e.sum(axis=0, keepdims=True)


def tubal_softmax_h(x: np.ndarray, transform: Transform) -> np.ndarray:
    """The tubal softmax: slicewise softmax in the transform domain.

    Input and output are ``p x m x n``.  Summing the output over classes
    gives the identity tube of the algebra in every lateral slice.
    """
    if x.ndim != 3:
        raise ValueError("input must be a p x m x n tensor")
    return transform.from_transform(_slicewise_softmax(transform.to_transform(x)))


def scalar_tubal_softmax(x: np.ndarray, transform: Transform) -> ProbabilityMatrix:
    """Tubal softmax followed by the sum along mode 3, safeguarded.

    Raises :class:`DegenerateColumnError` if a pre-normalization column
    sum falls below ``DEGENERATE_COLUMN_TOL`` (unreachable for finite
    inputs; it guards NaN/overflow propagation).
    """
    y = tubal_softmax_h(x, transform)
    q = y.sum(axis=2)
    col = q.sum(axis=0)
    if not np.all(col > DEGENERATE_COLUMN_TOL):
        raise DegenerateColumnError(
            f"column sum collapsed: min {col.min():.3e}"
        )
    residual = np.abs(col - 1.0)
    clamped = int((q < 0).sum())
    if clamped:
        q = np.maximum(q, 0.0)
        col = q.sum(axis=0)
        if not np.all(col > DEGENERATE_COLUMN_TOL):
            raise DegenerateColumnError("column sum collapsed after clamping")
    return ProbabilityMatrix(values=q / col, residual=residual, clamped=clamped)


def _check_labels(labels: np.ndarray, p: int, m: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (m,):
        raise ValueError(f"need {m} labels, got shape {labels.shape}")
    if labels.min() < 1 or labels.max() > p:
        raise ValueError(f"labels must lie in 1..{p}")
    return labels


def cross_entropy(probs, labels, reduction: str = "sum") -> float:
    """Negative log-likelihood of the true classes.

    ``probs`` is a :class:`ProbabilityMatrix` or a raw ``p x m`` array;
    ``labels`` are 1-based class indices.  Probabilities below
    ``PROBABILITY_FLOOR`` are clamped before the log (the clamp count is
    logged).
    """
    values = probs.values if isinstance(probs, ProbabilityMatrix) else np.asarray(probs)
    p, m = values.shape
    labels = _check_labels(labels, p, m)
    picked = values[labels - 1, np.arange(m)]
    n_clamped = int((picked < PROBABILITY_FLOOR).sum())
    if n_clamped:
        log.warning("cross_entropy clamped %d probabilities below %g",
                    n_clamped, PROBABILITY_FLOOR)
        picked = np.maximum(picked, PROBABILITY_FLOOR)
    # fsum: correctly-rounded total, so reordering samples cannot move it
    total = -math.fsum(np.log(picked))
    if reduction == "mean":
        return float(total / m)
    if reduction != "sum":
        raise ValueError(f"unknown reduction {reduction!r}")
    return float(total)


def loss_input_gradient(x: np.ndarray, labels, transform: Transform,
                        reduction: str = "sum") -> np.ndarray:
    """Exact gradient of ``cross_entropy(scalar_tubal_softmax(x))`` wrt ``x``.

    Computed in the transform domain: the renormalization and
    mode-3-sum adjoints broadcast the per-class error to every slice, the
    slicewise softmax contributes its Jacobian ``diag(y) - y y^T``, and
    the final hop applies the transform adjoint.

    Under the circulant algebra the whole chain collapses exactly to the
    classical softmax/cross-entropy gradient of the tube sums, broadcast
    along mode 3; that short form is used there (only the zero-frequency
    slice carries gradient because the mode-3 sum of an inverse FFT is
    its DC coefficient).
    """
    p, m, n = x.shape
    labels = _check_labels(labels, p, m)
    one_hot = np.zeros((p, m))
    one_hot[labels - 1, np.arange(m)] = 1.0
    scale = 1.0 / m if reduction == "mean" else 1.0
    if reduction not in ("sum", "mean"):
        raise ValueError(f"unknown reduction {reduction!r}")

    if transform.kind == "circulant":
        u = x.sum(axis=2)
        s = _slicewise_softmax(u)
        d_u = (s - one_hot) * scale
        return np.repeat(d_u[:, :, None], n, axis=2)

    x_hat = transform.to_transform(x)
    y_hat = _slicewise_softmax(x_hat)
    q = transform.from_transform(y_hat).sum(axis=2)
    col = q.sum(axis=0)
    if not np.all(col > DEGENERATE_COLUMN_TOL):
        raise DegenerateColumnError(f"column sum collapsed: min {col.min():.3e}")
    picked = np.maximum(q[labels - 1, np.arange(m)], PROBABILITY_FLOOR)
    # loss = -sum_i [log q[c_i, i] - log col_i]
    d_q = np.zeros((p, m))
    d_q[labels - 1, np.arange(m)] = -1.0 / picked
    d_q += 1.0 / col[None, :]
    d_q *= scale
    # mode-3 sum adjoint: broadcast, then inverse-transform adjoint
    d_y = np.repeat(d_q[:, :, None], n, axis=2)
    d_y_hat = np.tensordot(d_y, transform.matrix_inv, axes=([2], [0]))
    # softmax Jacobian (diag(y) - y y^T) per sample and slice
    inner = (y_hat * d_y_hat).sum(axis=0, keepdims=True)
    d_x_hat = y_hat * (d_y_hat - inner)
    return np.tensordot(d_x_hat, transform.matrix, axes=([2], [0]))


def least_squares_first_slice(x: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Internal least-squares objective on the first-frontal-slice readout.

    ``0.5 * ||X[:, :, 0] - C||_F^2`` with ``C`` the one-hot class matrix;
    returns the loss and its gradient wrt ``x`` (sum reduction).  Used
    only by the synthetic-spheres experiment, which trains against this
    scalar readout instead of the softmax path.
    """
    p, m, _ = x.shape
    labels = _check_labels(labels, p, m)
    one_hot = np.zeros((p, m))
    one_hot[labels - 1, np.arange(m)] = 1.0
    diff = x[:, :, 0] - one_hot
    grad = np.zeros_like(x)
    grad[:, :, 0] = diff
    return float(0.5 * (diff ** 2).sum()), grad


def smoothness_regularizer(weights: list[np.ndarray], h: float):
    """Penalty ``(1/2h) * sum_j ||W_j - W_{j-1}||_F^2`` and its gradients.

    Gradients follow the discrete Laplacian stencil
    ``(1/h) * (2 W_j - W_{j-1} - W_{j+1})`` with one-sided ends.
    """
    if len(weights) < 2:
        raise ValueError("need at least two weight tensors")
    shape = weights[0].shape
    for w in weights:
        if w.shape != shape:
            raise ValueError("all weights must share one shape")
    value = sum(
        float(((weights[j] - weights[j - 1]) ** 2).sum())
        for j in range(1, len(weights))
    ) / (2.0 * h)
    grads = []
    for j, w in enumerate(weights):
        g = np.zeros_like(w)
        if j > 0:
            g += w - weights[j - 1]
        if j < len(weights) - 1:
            g -= weights[j + 1] - w
        grads.append(g / h)
    return value, grads


class SgdState:
    """Stochastic gradient descent with classical momentum.

    Update: ``v <- mu * v + g``; ``w <- w - alpha * v``.  Velocities are
    keyed by parameter name and created lazily; parameters are updated in
    place.  One instance per training run; not thread-safe.
    """

    def __init__(self, lr: float, momentum: float = 0.0):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        self.lr = lr
        self.momentum = momentum
        self.velocities: dict[str, np.ndarray] = {}

    def step(self, named_params, named_grads) -> None:
        """Apply one update; the two iterables must align by name."""
        for (name, param), (gname, grad) in zip(named_params, named_grads):
            if name != gname:
                raise ValueError(f"parameter/gradient mismatch: {name} vs {gname}")
            if param.shape != grad.shape:
                raise ValueError(
                    f"shape mismatch for {name}: {param.shape} vs {grad.shape}"
                )
            v = self.velocities.get(name)
            if v is None:
                v = np.zeros_like(param)
                self.velocities[name] = v
            v *= self.momentum
            v += grad
            param -= self.lr * v
