"""Smoothness terms over gradient fields.

Four interchangeable penalties: plain total variation, Huber and
Charbonnier relaxations, and the unrolled quadratic proxy built from a
short soft-threshold / multiplier-update recursion. Each is exposed both
as a pure function returning ``(value, gradient-w.r.t.-input-gradients)``
and as a small parameter object usable inside the training loop.

The unrolled penalty runs, for a fixed gradient field ``c`` and
``beta[-1] = 0``::

    q[t]    = soft_threshold(c - beta[t-1], lam / rho)
    beta[t] = beta[t-1] + eta * (q[t] - c)

for ``t = 0..steps-1``, then scores ``rho/2 * mean_t ||q[t] + beta[t] - c||^2``.
The iterates are treated as frozen buffers when differentiating, so the
gradient is simply ``rho * mean_t (c - q[t] - beta[t])``: continuous in
``c``, vanishing at the optimum, and TV-like for large gradients.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

__all__ = [
    "RegularizerConfig",
    "UnrollState",
    "SmoothnessResult",
    "soft_threshold",
    "unroll_updates",
    "unrolled_smoothness",
    "tv_smoothness",
    "huber_smoothness",
    "charbonnier_smoothness",
    "SmoothnessPenalty",
    "TotalVariationPenalty",
    "HuberPenalty",
    "CharbonnierPenalty",
    "UnrolledPenalty",
    "make_penalty",
    "PENALTY_NAMES",
]


@dataclass(frozen=True)
class RegularizerConfig:
    """Hyperparameters shared by the smoothness terms.

    ``lam`` weighs the sparsity objective, ``rho`` the quadratic coupling,
    ``eta`` the multiplier update rate and ``steps`` the number of unroll
    iterations. ``huber_k`` and ``charbonnier_eps`` belong to the baseline
    relaxations.
    """

    lam: float
    rho: float = 1.0
    eta: float = 0.5
    steps: int = 2
    huber_k: float = 1.0
    charbonnier_eps: float = 1e-3

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError(f"rho must be finite and > 0, got {self.rho}")
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be finite and > 0, got {self.eta}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be an integer >= 1, got {self.steps}")
        if not (np.isfinite(self.huber_k) and self.huber_k > 0):
            raise ValueError(f"huber_k must be finite and > 0, got {self.huber_k}")
        if not (np.isfinite(self.charbonnier_eps) and self.charbonnier_eps > 0):
            raise ValueError(
                f"charbonnier_eps must be finite and > 0, got {self.charbonnier_eps}"
            )

    @property
    def kappa(self):
        """Soft-threshold level lam / rho."""
        return self.lam / self.rho


class UnrollState(NamedTuple):
    """Frozen iterates of the unroll recursion, one entry per step."""

    q_seq: tuple
    beta_seq: tuple


class SmoothnessResult(NamedTuple):
    """Scalar penalty value and its gradient w.r.t. the input gradients."""

    value: float
    grad: np.ndarray


def soft_threshold(x, kappa):
    """Shrink ``x`` toward zero by ``kappa``; zero inside ``|x| < kappa``.

    The exact minimizer of ``lam*|q| + rho/2*(q - x)^2`` for
    ``kappa = lam/rho``. Applied elementwise on arrays.
    """
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - kappa, 0.0)
    return out if out.ndim else float(out)


def unroll_updates(c, cfg, beta_init=None):
    """Run the soft-threshold / multiplier-update recursion on a fixed
    gradient field.

    ``beta_init`` (default zero) lets a caller warm-start the multiplier
    from a previous training step. Deterministic; returns the frozen
    iterate sequences.
    """
    c = np.asarray(c, dtype=np.float64)
    kappa = cfg.kappa
    beta = np.zeros_like(c) if beta_init is None else np.asarray(beta_init, dtype=np.float64)
    if beta.shape != c.shape:
        raise ValueError(f"beta_init shape {beta.shape} does not match c {c.shape}")
    q_seq, beta_seq = [], []
    for _ in range(cfg.steps):
        q = np.asarray(soft_threshold(c - beta, kappa))
        beta = beta + cfg.eta * (q - c)
        q_seq.append(q)
        beta_seq.append(beta)
    return UnrollState(tuple(q_seq), tuple(beta_seq))


def unrolled_smoothness(c, state, cfg):
    """Quadratic distance between the gradients and their sparsified
    targets, averaged over the unroll steps.

    value = rho/2 * 1/T * sum_t ||q[t] + beta[t] - c||^2
    grad  = rho   * 1/T * sum_t (c - q[t] - beta[t])

    with the iterates in ``state`` held constant (frozen-buffer
    semantics).
    """
    c = np.asarray(c, dtype=np.float64)
    if len(state.q_seq) != cfg.steps:
        raise ValueError(f"state has {len(state.q_seq)} steps, config says {cfg.steps}")
    value = 0.0
    grad = np.zeros_like(c)
    for q, beta in zip(state.q_seq, state.beta_seq):
        if q.shape != c.shape:
            raise ValueError(f"state shape {q.shape} does not match c {c.shape}")
        r = c - q - beta
        value += np.sum(r * r)
        grad += r
    t = cfg.steps
    return SmoothnessResult(0.5 * cfg.rho * value / t, (cfg.rho / t) * grad)


def tv_smoothness(c):
    """L1 norm of the gradients and its subgradient (sign, with sign(0)=0)."""
    c = np.asarray(c, dtype=np.float64)
    return SmoothnessResult(float(np.sum(np.abs(c))), np.sign(c))


def huber_smoothness(c, k):
    """Huber relaxation: quadratic inside ``|x| < k``, linear outside."""
    if k <= 0:
        raise ValueError(f"k must be > 0, got {k}")
    c = np.asarray(c, dtype=np.float64)
    a = np.abs(c)
    value = float(np.sum(np.where(a < k, 0.5 * c * c, k * a - 0.5 * k * k)))
    return SmoothnessResult(value, np.clip(c, -k, k))


def charbonnier_smoothness(c, eps):
    """Charbonnier relaxation ``sqrt(x^2 + eps^2)``, a smooth L1 proxy."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    c = np.asarray(c, dtype=np.float64)
    r = np.sqrt(c * c + eps * eps)
    return SmoothnessResult(float(np.sum(r)), c / r)


class SmoothnessPenalty(BaseEstimator):
    """Base class for the penalty objects consumed by the training loop.

    Subclasses implement ``__call__(c, carry=None)`` returning
    ``(value, grad, carry)`` where ``value`` and ``grad`` already include
    every weighting factor, and ``carry`` threads optional state between
    training steps (None for the stateless penalties). Inheriting from
    ``BaseEstimator`` provides ``get_params`` / ``set_params`` so penalties
    compose with grid-search style tooling.
    """

    def __call__(self, c, carry=None):
        raise NotImplementedError


class TotalVariationPenalty(SmoothnessPenalty):
    def __init__(self, lam=1e-2):
        self.lam = lam

    def __call__(self, c, carry=None):
        value, grad = tv_smoothness(c)
        return self.lam * value, self.lam * grad, None


class HuberPenalty(SmoothnessPenalty):
    def __init__(self, lam=1e-2, k=0.01):
        self.lam = lam
        self.k = k

    def __call__(self, c, carry=None):
        value, grad = huber_smoothness(c, self.k)
        return self.lam * value, self.lam * grad, None


class CharbonnierPenalty(SmoothnessPenalty):
    def __init__(self, lam=1e-2, eps=0.01):
        self.lam = lam
        self.eps = eps

    def __call__(self, c, carry=None):
        value, grad = charbonnier_smoothness(c, self.eps)
        return self.lam * value, self.lam * grad, None


class UnrolledPenalty(SmoothnessPenalty):
    """Unrolled quadratic proxy; ``lam`` enters through the threshold
    ``lam/rho`` rather than as an outer weight.

    With ``warm_start=True`` the multiplier sequence continues from the
    previous training step instead of restarting at zero.
    """

    def __init__(self, lam=1e-2, rho=1.0, eta=0.5, steps=2, warm_start=False):
        self.lam = lam
        self.rho = rho
        self.eta = eta
        self.steps = steps
        self.warm_start = warm_start

    def config(self):
        return RegularizerConfig(lam=self.lam, rho=self.rho, eta=self.eta, steps=self.steps)

    def __call__(self, c, carry=None):
        cfg = self.config()
        beta_init = carry if self.warm_start else None
        state = unroll_updates(c, cfg, beta_init=beta_init)
        value, grad = unrolled_smoothness(c, state, cfg)
        next_carry = state.beta_seq[-1] if self.warm_start else None
        return value, grad, next_carry


PENALTY_NAMES = ("tv", "huber", "charbonnier", "unrolled")

_PENALTY_CLASSES = {
    "tv": TotalVariationPenalty,
    "huber": HuberPenalty,
    "charbonnier": CharbonnierPenalty,
    "unrolled": UnrolledPenalty,
}


def make_penalty(name, **params):
    """Instantiate a penalty by name: tv, huber, charbonnier or unrolled."""
    try:
        cls = _PENALTY_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown penalty {name!r}, expected one of {PENALTY_NAMES}") from None
    return cls(**params)
