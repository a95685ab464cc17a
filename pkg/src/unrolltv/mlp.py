"""Small fully-connected scalar predictor with hand-written backprop.

Fixed topology of 4 affine layers (widths ``in, h1, h2, h3, out``), tanh
on the hidden layers and identity on the output. Parameters live in a
plain list of ``(weights, bias)`` pairs so the optimizer and the
finite-difference checker can treat them uniformly. No autodiff
framework: the backward pass is derived by hand and validated against
central finite differences.
"""

from typing import NamedTuple

import numpy as np

__all__ = [
    "DEFAULT_WIDTHS",
    "DivergenceError",
    "GradCheckReport",
    "init_mlp",
    "forward_activations",
    "mlp_forward",
    "mlp_backward",
    "gd_step",
    "output_bound",
    "n_params",
    "params_to_vector",
    "vector_to_params",
    "finite_diff_check",
]

DEFAULT_WIDTHS = (1, 64, 64, 64, 1)


class DivergenceError(RuntimeError):
    """Raised when an update would push parameters to NaN/Inf."""


class GradCheckReport(NamedTuple):
    """Worst disagreement between analytic and numeric gradients.

    ``worst_param_index`` is ``(layer, kind, flat_index)`` with kind
    "W" or "b".
    """

    max_rel_error: float
    worst_param_index: tuple


def init_mlp(widths=DEFAULT_WIDTHS, seed=0):
    """Build seeded parameters, uniform in +-1/sqrt(fan_in) per layer.

    ``seed`` may be an integer or a ``numpy.random.Generator``. The
    topology is fixed at 4 affine layers, so ``widths`` must list 5
    sizes.
    """
    widths = tuple(int(w) for w in widths)
    if len(widths) != 5:
        raise ValueError(f"widths must list 5 sizes (4 affine layers), got {widths}")
    if any(w < 1 for w in widths):
        raise ValueError(f"widths must be positive, got {widths}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=fan_out)
        params.append((w, b))
    # overflow sanity guard: tanh saturation makes the output bounded
    assert np.isfinite(output_bound(params))
    return params


def output_bound(params):
    """Bound on |net(x)| valid for every input, from tanh saturation.

    The last hidden activation lies in [-1, 1] elementwise, so the
    output layer alone determines the bound.
    """
    w, b = params[-1]
    return float(np.max(np.sum(np.abs(w), axis=0) + np.abs(b)))


def forward_activations(params, xs):
    """Forward pass keeping every post-activation layer output."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1:
        raise ValueError(f"xs must be 1D, got shape {xs.shape}")
    if not np.all(np.isfinite(xs)):
        raise ValueError("xs must be finite")
    h = xs[:, None]
    acts = [h]
    last = len(params) - 1
    for i, (w, b) in enumerate(params):
        z = h @ w + b
        h = z if i == last else np.tanh(z)
        acts.append(h)
    return acts


def mlp_forward(params, xs):
    """Evaluate the network pointwise on a vector of inputs."""
    return forward_activations(params, xs)[-1][:, 0]


def mlp_backward(params, xs, upstream, acts=None):
    """Gradients of sum_i upstream_i * net(x_i) w.r.t. every parameter.

    ``upstream`` is dLoss/dOutput at each input; the return value
    mirrors the params structure. ``acts`` lets a caller that already
    ran :func:`forward_activations` skip the recomputation.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if acts is None:
        acts = forward_activations(params, xs)
    if upstream.shape != (acts[0].shape[0],):
        raise ValueError(
            f"upstream shape {upstream.shape} does not match {acts[0].shape[0]} inputs"
        )
    delta = upstream[:, None]
    grads = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        h_in = acts[i]
        grads[i] = (h_in.T @ delta, delta.sum(axis=0))
        if i > 0:
            # tanh'(z) = 1 - tanh(z)^2, and acts[i] is tanh(z) itself
            delta = (delta @ params[i][0].T) * (1.0 - h_in * h_in)
    return grads


def gd_step(params, grads, lr):
    """One plain gradient-descent update, theta <- theta - lr * g."""
    if lr < 0:
        raise ValueError(f"lr must be >= 0, got {lr}")
    out = []
    for (w, b), (gw, gb) in zip(params, grads):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise DivergenceError("non-finite gradient, aborting descent")
        out.append((w - lr * gw, b - lr * gb))
    return out


def n_params(params):
    return sum(w.size + b.size for w, b in params)


def params_to_vector(params):
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in params])


def vector_to_params(vec, params_like):
    """Inverse of params_to_vector, shaped after ``params_like``."""
    vec = np.asarray(vec, dtype=np.float64)
    out, pos = [], 0
    for w, b in params_like:
        nw, nb = w.size, b.size
        out.append((vec[pos:pos + nw].reshape(w.shape), vec[pos + nw:pos + nw + nb].copy()))
        pos += nw + nb
    if pos != vec.size:
        raise ValueError(f"vector length {vec.size} does not match params ({pos})")
    return out


def _coordinate_index(params, flat):
    """Map a flat coordinate to (layer, 'W'|'b', index-within-block)."""
    pos = 0
    for layer, (w, b) in enumerate(params):
        if flat < pos + w.size:
            return (layer, "W", flat - pos)
        pos += w.size
        if flat < pos + b.size:
            return (layer, "b", flat - pos)
        pos += b.size
    raise IndexError(flat)


def finite_diff_check(params, loss_fn, step=1e-5, max_coords=10_000, seed=0):
    """Compare loss_fn's analytic gradient against central differences.

    ``loss_fn(params) -> (value, grads)`` must be deterministic. Every
    coordinate is probed, except that nets above ``max_coords``
    parameters are subsampled (seeded) to keep the sweep bounded.
    """
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    _, grads = loss_fn(params)
    analytic = params_to_vector(grads)
    theta = params_to_vector(params)
    n = theta.size
    if n > max_coords:
        coords = np.sort(np.random.default_rng(seed).choice(n, size=max_coords, replace=False))
    else:
        coords = np.arange(n)
    worst_err, worst_idx = 0.0, _coordinate_index(params, 0)
    for i in coords:
        probe = theta.copy()
        probe[i] = theta[i] + step
        hi, _ = loss_fn(vector_to_params(probe, params))
        probe[i] = theta[i] - step
        lo, _ = loss_fn(vector_to_params(probe, params))
        numeric = (hi - lo) / (2.0 * step)
        err = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric), 1e-12)
        if err > worst_err:
            worst_err, worst_idx = err, _coordinate_index(params, int(i))
    return GradCheckReport(float(worst_err), worst_idx)
