"""Third-order tensor algebra and tensor neural networks.

The package provides the t-product and M-product tensor algebras
(:mod:`tnn.tensor`, :mod:`tnn.transforms`, :mod:`tnn.algebra`), network
layers with hand-derived backward passes (:mod:`tnn.layers`), tubal
softmax losses and SGD (:mod:`tnn.loss`), dataset loaders
(:mod:`tnn.datasets`), and a training CLI (:mod:`tnn.cli`).
"""

from .algebra import (
    SingularTubeError,
    bcirc_spectrum,
    m_identity,
    m_product,
    m_transpose,
    t_identity,
    t_product,
    t_transpose,
    tubal_apply,
    tube_inverse,
    tube_mult,
)
from .layers import LeapfrogBlock, Network, ResidualLayer, TLinearLayer
from .loss import (
    DegenerateColumnError,
    ProbabilityMatrix,
    SgdState,
    cross_entropy,
    loss_input_gradient,
    scalar_tubal_softmax,
    smoothness_regularizer,
    tubal_softmax_h,
)
from .tensor import (
    bcirc,
    circ,
    facewise_product,
    fold,
    fold3,
    mode3_product,
    unfold,
    unfold3,
)
from .transforms import Transform, dct_matrix

__version__ = "0.1.0"
