"""Network layers with explicit forward and backward passes.

Three layer kinds are provided:

* :class:`TLinearLayer` -- ``sigma(W * A + B)`` with the bias broadcast to
  every lateral slice,
* :class:`ResidualLayer` -- the explicit-Euler step ``A + h * sigma(W * A + B)``,
* :class:`LeapfrogBlock` -- the staggered two-field integrator whose
  momentum update uses ``W^T`` and whose position update uses ``W``; its
  conservative structure keeps forward propagation stable for any weights.

Backward passes are hand-derived reverse-mode rules, not autodiff: with
``G = dA_next (.) sigma'(Z)`` the t-linear gradients are ``W^T * G``,
``G * A^T`` and the lateral-slice sum for the bias.  The leapfrog adjoint
composes those two rules through the cached trajectory, exactly.

Forward must precede backward on the same instance (caches are consumed);
distinct instances are independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebra
from .transforms import Transform


@dataclass(frozen=True)
class Activation:
    """An elementwise nonlinearity and its derivative."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


TANH = Activation("tanh", np.tanh, lambda x: 1.0 - np.tanh(x) ** 2)
# derivative at 0 defined as 0
RELU = Activation("relu", lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(np.float64))
IDENTITY = Activation("identity", lambda x: x, lambda x: np.ones_like(x))

ACTIVATIONS = {a.name: a for a in (TANH, RELU, IDENTITY)}


def _check_forward_shapes(w: np.ndarray, b: np.ndarray, a: np.ndarray) -> None:
    if w.shape[1] != a.shape[0] or w.shape[2] != a.shape[2]:
        raise ValueError(f"weight {w.shape} cannot act on input {a.shape}")
    if b.shape != (w.shape[0], 1, w.shape[2]):
        raise ValueError(
            f"bias must be {(w.shape[0], 1, w.shape[2])}, got {b.shape}"
        )


class TLinearLayer:
    """A fully-connected tensor layer ``sigma(W * A + B)``.

    ``W`` has shape ``(ell_out, ell_in, n)`` and ``B`` shape
    ``(ell_out, 1, n)``; ``B`` is broadcast across lateral slices.  The
    pre-activation ``Z`` is cached by :meth:`forward` for the backward
    pass.
    """

    def __init__(self, w: np.ndarray, b: np.ndarray, activation: Activation = TANH):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        if self.w.ndim != 3 or self.b.ndim != 3:
            raise ValueError("weights and bias must be third-order tensors")
        self.activation = activation
        self._cache = None
        self.grad_w = None
        self.grad_b = None

    @property
    def param_count(self) -> int:
        return self.w.size + self.b.size

    def forward(self, a: np.ndarray, transform: Transform) -> np.ndarray:
        _check_forward_shapes(self.w, self.b, a)
        z = algebra.product(self.w, a, transform) + self.b
        self._cache = (a, z)
        return self.activation.f(z)

    def backward(self, d_out: np.ndarray, transform: Transform):
        """Return ``(d_in, d_w, d_b)`` for the cached forward pass."""
        if self._cache is None:
            raise RuntimeError("backward called before forward (no cached Z)")
        a_in, z = self._cache
        g = d_out * self.activation.df(z)
        d_in = algebra.product(algebra.transpose(self.w, transform), g, transform)
        d_w = algebra.product(g, algebra.transpose(a_in, transform), transform)
        d_b = g.sum(axis=1, keepdims=True)
        self.grad_w, self.grad_b = d_w, d_b
        return d_in, d_w, d_b


class ResidualLayer:
    """Explicit-Euler residual step ``A + h * sigma(W * A + B)``.

    Requires square ``W``.  ``h = 0`` degenerates to the identity map with
    zero parameter gradients.
    """

    def __init__(self, w: np.ndarray, b: np.ndarray, h: float,
                 activation: Activation = TANH):
        if w.shape[0] != w.shape[1]:
            raise ValueError(f"residual layers need square weights, got {w.shape}")
        self.w = np.asarray(w, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.h = float(h)
        self.activation = activation
        self._cache = None
        self.grad_w = None
        self.grad_b = None

    @property
    def param_count(self) -> int:
        return self.w.size + self.b.size

    def forward(self, a: np.ndarray, transform: Transform) -> np.ndarray:
        _check_forward_shapes(self.w, self.b, a)
        z = algebra.product(self.w, a, transform) + self.b
        self._cache = (a, z)
        return a + self.h * self.activation.f(z)

    def backward(self, d_out: np.ndarray, transform: Transform):
        if self._cache is None:
            raise RuntimeError("backward called before forward (no cached Z)")
        a_in, z = self._cache
        g = d_out * self.activation.df(z) * self.h
        d_w = algebra.product(g, algebra.transpose(a_in, transform), transform)
        d_b = g.sum(axis=1, keepdims=True)
        d_in = d_out + algebra.product(
            algebra.transpose(self.w, transform), g, transform
        )
        self.grad_w, self.grad_b = d_w, d_b
        return d_in, d_w, d_b


class LeapfrogBlock:
    """Staggered two-field block over ``steps`` layers of tied weights.

    Per step ``j`` (momentum ``Z`` starts at zero):

    .. code-block:: text

        Z_{j+1/2} = Z_{j-1/2} - h * sigma(W_j^T * A_j + B_j)
        A_{j+1}   = A_j       + h * sigma(W_j * Z_{j+1/2} + B_j)

    The same ``B_j`` feeds both updates.  With ``weight_sharing`` a single
    ``(W, B)`` pair drives every step and its gradient accumulates across
    steps.
    """

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray],
                 h: float, activation: Activation = TANH,
                 weight_sharing: bool = False, steps: int | None = None):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need matching, non-empty weight and bias lists")
        for w in weights:
            if w.shape[0] != w.shape[1]:
                raise ValueError(f"leapfrog weights must be square, got {w.shape}")
            if w.shape != weights[0].shape:
                raise ValueError("all leapfrog weights must share one shape")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.h = float(h)
        self.activation = activation
        self.weight_sharing = weight_sharing
        if weight_sharing:
            if len(weights) != 1:
                raise ValueError("weight sharing expects exactly one layer")
            self.steps = steps if steps is not None else 1
        else:
            if steps is not None and steps != len(weights):
                raise ValueError("steps must equal the number of layers")
            self.steps = len(weights)
        self._trajectory = None
        self.grad_weights = None
        self.grad_biases = None

    @property
    def param_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def _layer_index(self, step: int) -> int:
        return 0 if self.weight_sharing else step

    def forward(self, a0: np.ndarray, transform: Transform) -> np.ndarray:
        sigma = self.activation.f
        a = a0
        z = np.zeros_like(a0)
        trajectory = []
        for step in range(self.steps):
            w = self.weights[self._layer_index(step)]
            b = self.biases[self._layer_index(step)]
            _check_forward_shapes(w, b, a)
            u = algebra.product(algebra.transpose(w, transform), a, transform) + b
            z_next = z - self.h * sigma(u)
            v = algebra.product(w, z_next, transform) + b
            a_next = a + self.h * sigma(v)
            trajectory.append((a, z_next, u, v))
            a, z = a_next, z_next
        self._trajectory = trajectory
        return a

    def backward(self, d_out: np.ndarray, transform: Transform):
        """Return ``(d_a0, grad_weights, grad_biases)`` for the cached pass."""
        if self._trajectory is None:
            raise RuntimeError("backward called before forward (no trajectory)")
        dsigma = self.activation.df
        h = self.h
        grad_w = [np.zeros_like(w) for w in self.weights]
        grad_b = [np.zeros_like(b) for b in self.biases]
        ga = d_out
        gz = np.zeros_like(d_out)
        for step in range(self.steps - 1, -1, -1):
            idx = self._layer_index(step)
            w = self.weights[idx]
            a_j, z_half, u, v = self._trajectory[step]
            gv = ga * dsigma(v) * h
            grad_w[idx] += algebra.product(
                gv, algebra.transpose(z_half, transform), transform
            )
            grad_b[idx] += gv.sum(axis=1, keepdims=True)
            gz = gz + algebra.product(algebra.transpose(w, transform), gv, transform)
            gu = gz * dsigma(u) * (-h)
            grad_w[idx] += algebra.product(
                a_j, algebra.transpose(gu, transform), transform
            )
            grad_b[idx] += gu.sum(axis=1, keepdims=True)
            ga = ga + algebra.product(w, gu, transform)
        self.grad_weights, self.grad_biases = grad_w, grad_b
        return ga, grad_w, grad_b


Block = TLinearLayer | ResidualLayer | LeapfrogBlock


class Network:
    """An ordered stack of blocks plus a classification tensor.

    ``classifier`` has shape ``(p, ell_N, n)`` where ``p`` is the class
    count and ``ell_N`` the output feature dimension of the last block.
    """

    def __init__(self, blocks: list[Block], classifier: np.ndarray,
                 transform: Transform):
        self.blocks = blocks
        self.classifier = np.asarray(classifier, dtype=np.float64)
        self.transform = transform
        self.grad_classifier = None
        self._last_output = None

    def forward(self, a: np.ndarray) -> np.ndarray:
        for block in self.blocks:
            a = block.forward(a, self.transform)
        self._last_output = a
        return a

    def logits(self, a_n: np.ndarray) -> np.ndarray:
        """Apply the classification tensor: ``X = W_N * A_N``."""
        return algebra.product(self.classifier, a_n, self.transform)

    def classify(self, a_n: np.ndarray):
        """Class probabilities for network output ``a_n`` (p x m)."""
        from .loss import scalar_tubal_softmax

        return scalar_tubal_softmax(self.logits(a_n), self.transform)

    def backward(self, d_logits: np.ndarray) -> np.ndarray:
        """Propagate the gradient at the logits back to the input.

        Also fills ``grad_classifier`` and every block's parameter
        gradients.  Requires a preceding :meth:`forward`.
        """
        if self._last_output is None:
            raise RuntimeError("backward called before forward")
        self.grad_classifier = algebra.product(
            d_logits, algebra.transpose(self._last_output, self.transform),
            self.transform,
        )
        d_a = algebra.product(
            algebra.transpose(self.classifier, self.transform), d_logits,
            self.transform,
        )
        for block in reversed(self.blocks):
            d_a = block.backward(d_a, self.transform)[0]
        return d_a

    def named_params(self):
        """Yield ``(name, array)`` for every learnable tensor, in order."""
        for bi, block in enumerate(self.blocks):
            if isinstance(block, LeapfrogBlock):
                for li, (w, b) in enumerate(zip(block.weights, block.biases)):
                    yield f"block{bi}.layer{li}.W", w
                    yield f"block{bi}.layer{li}.B", b
            else:
                yield f"block{bi}.W", block.w
                yield f"block{bi}.B", block.b
        yield "classifier.W", self.classifier

    def named_grads(self):
        """Gradients aligned with :meth:`named_params` (after backward)."""
        for bi, block in enumerate(self.blocks):
            if isinstance(block, LeapfrogBlock):
                for li, (gw, gb) in enumerate(
                    zip(block.grad_weights, block.grad_biases)
                ):
                    yield f"block{bi}.layer{li}.W", gw
                    yield f"block{bi}.layer{li}.B", gb
            else:
                yield f"block{bi}.W", block.grad_w
                yield f"block{bi}.B", block.grad_b
        yield "classifier.W", self.grad_classifier

    def param_count(self) -> int:
        """Exact number of learnable scalars."""
        return sum(p.size for _, p in self.named_params())

    def leapfrog_weight_chains(self):
        """Weight lists of each leapfrog block (for the smoothness penalty)."""
        return [b.weights for b in self.blocks if isinstance(b, LeapfrogBlock)]


# -- weight initialization ----------------------------------------------------

def init_dense_weight(rng: np.random.Generator, ell_out: int, ell_in: int,
                      n: int, transform: Transform) -> np.ndarray:
    """Gaussian init with std ``1/sqrt(ell_in)`` per transform-domain slice.

    Orthogonal/identity kinds draw in the transform domain and hop back;
    the circulant kind draws spatially at the same scale (its frequency
    representation is complex, so the spatial draw is the real-arithmetic
    equivalent).
    """
    std = 1.0 / np.sqrt(ell_in)
    draw = rng.standard_normal((ell_out, ell_in, n)) * std
    if transform.kind == "circulant" or transform.kind == "identity":
        return draw
    return np.tensordot(draw, transform.matrix_inv, axes=([2], [1]))


def init_unit_tube(rng: np.random.Generator, n: int) -> np.ndarray:
    """A ``1 x 1 x n`` tube drawn standard normal and normalized to unit norm."""
    t = rng.standard_normal(n)
    return (t / np.linalg.norm(t)).reshape(1, 1, n)
