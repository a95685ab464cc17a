"""Reference solvers used to cross-check the unrolled machinery.

Two independent routes to the same 1D denoising problem

    minimize_f  1/2 ||f - y||^2 + lam * ||grad f||_1

a classic ADMM iteration with an exact tridiagonal F-update, and a
direct (non-iterative) taut-string solver. They validate each other,
and a third diagnostic confirms that the unroll recursion reproduces
ADMM's Q/beta iterates exactly once the prediction is frozen.

This module deliberately re-implements its own soft shrinkage instead
of importing the one under test, so agreement between routes means
something.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solveh_banded

from .fields import check_field, gradient_adjoint, spatial_gradient
from .regularizers import unroll_updates

__all__ = [
    "DenoiseProblem",
    "AdmmTrace",
    "DiagnosticReport",
    "admm_denoise",
    "exact_tv_denoise_1d",
    "denoise_objective",
    "unroll_vs_admm_diagnostic",
]


@dataclass(frozen=True)
class DenoiseProblem:
    """Noisy 1D observation plus the TV weight lam >= 0."""

    y: np.ndarray
    lam: float

    def __post_init__(self):
        y = check_field(self.y, name="y")
        if y.ndim != 1:
            raise ValueError(f"y must be 1D, got shape {y.shape}")
        object.__setattr__(self, "y", y)
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")


class AdmmTrace(NamedTuple):
    """Per-iteration primal residual, dual residual and objective."""

    primal_residual: np.ndarray
    dual_residual: np.ndarray
    objective: np.ndarray


class DiagnosticReport(NamedTuple):
    """Per-step gaps between unrolled and frozen-ADMM iterates."""

    q_gaps: np.ndarray
    beta_gaps: np.ndarray

    @property
    def max_gap(self):
        return float(max(self.q_gaps.max(), self.beta_gaps.max()))


def _shrink(x, kappa):
    # same operator as the regularizers' soft threshold, written in the
    # fmax form so the two routes stay independent
    return np.fmax(x - kappa, 0.0) - np.fmax(-x - kappa, 0.0)


def _grad_1d(f):
    return spatial_gradient(f)[0]


def _grad_adjoint_1d(u):
    return gradient_adjoint(u[None])


def denoise_objective(f, problem):
    """1/2 ||f - y||^2 + lam * ||grad f||_1 for a candidate f."""
    r = f - problem.y
    return 0.5 * float(np.sum(r * r)) + problem.lam * float(np.sum(np.abs(_grad_1d(f))))


def admm_denoise(problem, rho=1.0, eta=1.0, iters=200):
    """Solve the denoising problem by alternating exact updates.

    Per iteration: (a) minimize over f with q, beta fixed — a strictly
    positive-definite tridiagonal system solved directly; (b) shrink to
    update q; (c) multiplier step beta += eta * (q - grad f). Returns
    the final f and the residual/objective trace; non-convergence shows
    up in the trace rather than as an error.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if rho <= 0 or eta <= 0:
        raise ValueError(f"rho and eta must be > 0, got rho={rho}, eta={eta}")
    y = problem.y
    n = y.size
    if n == 1:
        # gradient operator is identically zero, data term alone decides
        f = y.copy()
        trace = AdmmTrace(np.zeros(iters), np.zeros(iters), np.full(iters, denoise_objective(f, problem)))
        return f, trace
    kappa = problem.lam / rho

    # banded I + rho * D^T D: diagonal 1 + 2 rho with 1 + rho ends,
    # off-diagonal -rho
    ab = np.zeros((2, n))
    ab[0, 1:] = -rho
    ab[1, :] = 1.0 + 2.0 * rho
    ab[1, 0] = ab[1, -1] = 1.0 + rho

    f = y.copy()
    q = _grad_1d(f)
    beta = np.zeros(n)
    primal = np.empty(iters)
    dual = np.empty(iters)
    objective = np.empty(iters)
    for it in range(iters):
        rhs = y + rho * _grad_adjoint_1d(q + beta)
        f = solveh_banded(ab, rhs)
        df = _grad_1d(f)
        q_prev = q
        q = _shrink(df - beta, kappa)
        beta = beta + eta * (q - df)
        primal[it] = np.linalg.norm(q - df)
        dual[it] = rho * np.linalg.norm(_grad_adjoint_1d(q - q_prev))
        objective[it] = denoise_objective(f, problem)
    return f, AdmmTrace(primal, dual, objective)


def exact_tv_denoise_1d(problem):
    """Exact minimizer of the 1D problem via the taut-string method.

    Direct O(N) algorithm of Condat, "A direct algorithm for 1D total
    variation denoising" (IEEE SPL 2013): the solution is the
    derivative of the tightest string threaded through a tube of radius
    lam around the running sum of y.
    """
    y = problem.y
    lam = problem.lam
    if lam == 0 or y.size == 1:
        return y.copy()
    return _taut_string(y, lam)


def _taut_string(w, lam):
    # lower/upper tube boundaries are cumulative sums offset by lam,
    # pinned together at both ends; the output is the slope sequence of
    # the greatest convex minorant / least concave majorant exchange
    n = w.size
    width = n + 1
    index_low = np.zeros(width, dtype=np.intp)
    slope_low = np.zeros(width)
    index_up = np.zeros(width, dtype=np.intp)
    slope_up = np.zeros(width)
    index = np.zeros(width, dtype=np.intp)
    z = np.zeros(width)

    y_low = np.empty(width)
    y_up = np.empty(width)
    y_low[0] = y_up[0] = 0.0
    y_low[1:] = np.cumsum(w)
    y_up[1:] = y_low[1:] + lam
    y_low[1:] -= lam
    y_low[-1] += lam
    y_up[-1] -= lam

    slope_low[0] = np.inf
    slope_up[0] = -np.inf
    z[0] = y_low[0]

    s_low = c_low = s_up = c_up = c = 0
    for i in range(1, width):
        c_low += 1
        c_up += 1
        index_low[c_low] = index_up[c_up] = i

        # extend the lower string, merging segments that break convexity
        slope_low[c_low] = y_low[i] - y_low[i - 1]
        while c_low > s_low + 1 and slope_low[max(s_low, c_low - 1)] <= slope_low[c_low]:
            c_low -= 1
            index_low[c_low] = i
            if c_low > s_low + 1:
                slope_low[c_low] = (y_low[i] - y_low[index_low[c_low - 1]]) / (i - index_low[c_low - 1])
            else:
                slope_low[c_low] = (y_low[i] - z[c]) / (i - index[c])

        # symmetric step for the upper string (concavity)
        slope_up[c_up] = y_up[i] - y_up[i - 1]
        while c_up > s_up + 1 and slope_up[max(c_up - 1, s_up)] >= slope_up[c_up]:
            c_up -= 1
            index_up[c_up] = i
            if c_up > s_up + 1:
                slope_up[c_up] = (y_up[i] - y_up[index_up[c_up - 1]]) / (i - index_up[c_up - 1])
            else:
                slope_up[c_up] = (y_up[i] - z[c]) / (i - index[c])

        # strings crossing means a tube contact: freeze segments into z
        while c_low == s_low + 1 and c_up > s_up + 1 and slope_low[c_low] >= slope_up[s_up + 1]:
            c += 1
            s_up += 1
            index[c] = index_up[s_up]
            z[c] = y_up[index[c]]
            index_low[s_low] = index[c]
            slope_low[c_low] = (y_low[i] - z[c]) / (i - index[c])
        while c_up == s_up + 1 and c_low > s_low + 1 and slope_up[c_up] <= slope_low[s_low + 1]:
            c += 1
            s_low += 1
            index[c] = index_low[s_low]
            z[c] = y_low[index[c]]
            index_up[s_up] = index[c]
            slope_up[c_up] = (y_up[i] - z[c]) / (i - index[c])

    for i in range(1, c_low - s_low + 1):
        index[c + i] = index_low[s_low + i]
        z[c + i] = y_low[index[c + i]]
    c = c + c_low - s_low

    output = np.empty(n)
    j = 0
    for i in range(1, c + 1):
        slope = (z[i] - z[i - 1]) / (index[i] - index[i - 1])
        output[j:index[i]] = slope
        j = index[i]
    return output


def unroll_vs_admm_diagnostic(f_source, cfg):
    """Check that the unroll recursion equals ADMM with the prediction
    frozen.

    Freezes f at ``f_source``, takes c = grad f, and runs (a) the
    unroll recursion and (b) ADMM's q/beta updates with the f-update
    skipped, both from q empty, beta = 0. Reports the per-step infinity
    norm gaps, which should sit at rounding level.
    """
    f = check_field(f_source, name="f_source")
    c = spatial_gradient(f)
    state = unroll_updates(c, cfg)

    kappa = cfg.lam / cfg.rho
    beta = np.zeros_like(c)
    q_gaps = np.empty(cfg.steps)
    beta_gaps = np.empty(cfg.steps)
    for t in range(cfg.steps):
        q = _shrink(c - beta, kappa)
        beta = beta + cfg.eta * (q - c)
        q_gaps[t] = np.max(np.abs(q - state.q_seq[t]))
        beta_gaps[t] = np.max(np.abs(beta - state.beta_seq[t]))
    return DiagnosticReport(q_gaps, beta_gaps)
