"""Unrolled differentiable proxy for total-variation smoothness.

Core pieces: gradient-field plumbing (:mod:`unrolltv.fields`), the four
smoothness penalties including the unrolled proxy
(:mod:`unrolltv.regularizers`), a hand-backpropagated MLP predictor
(:mod:`unrolltv.mlp`), reference solvers (:mod:`unrolltv.oracles`), the
signal-prediction experiment (:mod:`unrolltv.experiments`), a
scikit-learn style estimator (:mod:`unrolltv.estimator`) and the
``unrolltv`` command line (:mod:`unrolltv.cli`).
"""

__version__ = "0.1.0"

from .estimator import SmoothSignalRegressor
from .fields import edge_mask, gradient_adjoint, mask_gradients, spatial_gradient
from .regularizers import (
    RegularizerConfig,
    SmoothnessResult,
    UnrollState,
    charbonnier_smoothness,
    huber_smoothness,
    make_penalty,
    soft_threshold,
    tv_smoothness,
    unroll_updates,
    unrolled_smoothness,
)

__all__ = [
    "__version__",
    "SmoothSignalRegressor",
    "edge_mask",
    "gradient_adjoint",
    "mask_gradients",
    "spatial_gradient",
    "RegularizerConfig",
    "SmoothnessResult",
    "UnrollState",
    "charbonnier_smoothness",
    "huber_smoothness",
    "make_penalty",
    "soft_threshold",
    "tv_smoothness",
    "unroll_updates",
    "unrolled_smoothness",
]
