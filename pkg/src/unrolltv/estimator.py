"""Scikit-learn style front end for the smoothness-regularized predictor.

Wraps the MLP training loop in the familiar fit/predict/get_params
surface so the penalties can be compared with standard model-selection
tooling. X is the sample coordinate (single feature), y the sampled
signal value; the smoothness term acts on a dense grid spanning the
training coordinates.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .experiments import fit_predictor
from .mlp import mlp_forward
from .regularizers import PENALTY_NAMES, make_penalty

__all__ = ["SmoothSignalRegressor"]


class SmoothSignalRegressor(RegressorMixin, BaseEstimator):
    """MLP regressor trained under a gradient-smoothness penalty.

    Parameters mirror the experiment config: ``penalty`` picks the
    smoothness term (tv, huber, charbonnier or unrolled), ``lam`` its
    weight, and the remaining knobs belong to the specific penalties
    and the optimizer. After ``fit`` the training diagnostics are
    available as ``log_``.
    """

    def __init__(
        self,
        penalty="unrolled",
        lam=0.001,
        rho=0.1,
        eta=0.5,
        unroll_steps=2,
        huber_k=0.02,
        charbonnier_eps=0.002,
        warm_start=False,
        hidden_width=64,
        lr=0.2,
        n_steps=2500,
        dense_resolution=1024,
        random_state=0,
    ):
        self.penalty = penalty
        self.lam = lam
        self.rho = rho
        self.eta = eta
        self.unroll_steps = unroll_steps
        self.huber_k = huber_k
        self.charbonnier_eps = charbonnier_eps
        self.warm_start = warm_start
        self.hidden_width = hidden_width
        self.lr = lr
        self.n_steps = n_steps
        self.dense_resolution = dense_resolution
        self.random_state = random_state

    def _make_penalty(self):
        if self.penalty not in PENALTY_NAMES:
            raise ValueError(f"penalty must be one of {PENALTY_NAMES}, got {self.penalty!r}")
        if self.penalty == "tv":
            return make_penalty("tv", lam=self.lam)
        if self.penalty == "huber":
            return make_penalty("huber", lam=self.lam, k=self.huber_k)
        if self.penalty == "charbonnier":
            return make_penalty("charbonnier", lam=self.lam, eps=self.charbonnier_eps)
        return make_penalty(
            "unrolled",
            lam=self.lam,
            rho=self.rho,
            eta=self.eta,
            steps=self.unroll_steps,
            warm_start=self.warm_start,
        )

    @staticmethod
    def _coords(X):
        if X.shape[1] != 1:
            raise ValueError(f"expected a single coordinate feature, got {X.shape[1]}")
        return np.ascontiguousarray(X[:, 0], dtype=np.float64)

    def fit(self, X, y):
        """Fit the predictor to sampled (coordinate, value) pairs."""
        X, y = check_X_y(X, y, y_numeric=True)
        xs = self._coords(X)
        lo, hi = float(xs.min()), float(xs.max())
        if lo == hi:
            raise ValueError("training coordinates must span a nonzero interval")
        xs_dense = np.linspace(lo, hi, self.dense_resolution)
        h = int(self.hidden_width)
        self.params_, self.log_ = fit_predictor(
            xs,
            np.asarray(y, dtype=np.float64),
            xs_dense,
            self._make_penalty(),
            widths=(1, h, h, h, 1),
            lr=self.lr,
            steps=self.n_steps,
            init_seed=np.random.default_rng(self.random_state),
        )
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return mlp_forward(self.params_, self._coords(X))
