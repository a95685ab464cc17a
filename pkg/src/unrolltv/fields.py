"""Grid fields, forward-difference gradients and edge-aware importance masks.

Conventions used throughout the package:

* a *field* is a float64 ndarray of shape ``(N,)`` (1D signal) or
  ``(H, W)`` / ``(H, W, C)`` (2D field, optionally multi-channel);
* a *gradient field* stacks the per-axis forward differences along a new
  leading axis, giving shape ``(n_axes, *field.shape)``;
* an *importance mask* carries one weight grid per spatial axis, shape
  ``(n_axes, *spatial_shape)``, every weight in (0, 1].

Forward differences use the replicate-boundary convention: the final
position along each axis carries gradient 0, so a constant field has an
identically zero gradient and the penalty cannot fabricate edges at the
frame border.
"""

import numpy as np

__all__ = [
    "check_field",
    "spatial_axes",
    "spatial_gradient",
    "gradient_adjoint",
    "edge_mask",
    "mask_gradients",
]


def check_field(values, name="field"):
    """Validate and return a field as a float64 array.

    Accepts 1D signals and 2D grids with an optional trailing channel
    axis. Rejects non-finite entries.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim not in (1, 2, 3):
        raise ValueError(f"{name} must have 1, 2 or 3 dims, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def spatial_axes(field):
    """Axes along which gradients are taken: (0,) for 1D, (0, 1) for 2D."""
    return (0,) if field.ndim == 1 else (0, 1)


def spatial_gradient(field):
    """Forward-difference gradient of a field, one component per spatial axis.

    Returns an array of shape ``(n_axes, *field.shape)``. The last slot
    along each differenced axis is 0 (replicate boundary).
    """
    f = check_field(field)
    axes = spatial_axes(f)
    grad = np.zeros((len(axes),) + f.shape)
    for k, ax in enumerate(axes):
        head = [slice(None)] * f.ndim
        head[ax] = slice(None, -1)
        grad[k][tuple(head)] = np.diff(f, axis=ax)
    return grad


def gradient_adjoint(grad):
    """Adjoint of :func:`spatial_gradient`, mapping a gradient field back
    to field shape.

    Satisfies ``<spatial_gradient(f), u> == <f, gradient_adjoint(u)>`` for
    every field ``f`` and gradient-shaped ``u``; this is the chain-rule
    companion used to push loss gradients through the difference operator.
    """
    g = np.asarray(grad, dtype=np.float64)
    if g.ndim < 2:
        raise ValueError(f"gradient field must be stacked per axis, got shape {g.shape}")
    field_ndim = g.ndim - 1
    axes = (0,) if field_ndim == 1 else (0, 1)
    if g.shape[0] != len(axes):
        raise ValueError(
            f"gradient field has {g.shape[0]} components, expected {len(axes)} "
            f"for field shape {g.shape[1:]}"
        )
    out = np.zeros(g.shape[1:])
    for k, ax in enumerate(axes):
        u = g[k].copy()
        tail = [slice(None)] * field_ndim
        tail[ax] = slice(-1, None)
        u[tuple(tail)] = 0.0  # dead slot: never produced by the forward op
        out -= u
        head = [slice(None)] * field_ndim
        head[ax] = slice(None, -1)
        shifted = [slice(None)] * field_ndim
        shifted[ax] = slice(1, None)
        out[tuple(shifted)] += u[tuple(head)]
    return out


def edge_mask(image, alpha):
    """Edge-aware importance weights ``exp(-alpha * |forward difference|)``.

    One weight grid per spatial axis; multi-channel images contribute one
    weight grid per channel which is then averaged, so the mask shape is
    ``(n_axes, *spatial_shape)``. ``alpha = 0`` or a constant image gives
    all-ones weights.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    img = check_field(image, name="image")
    g = spatial_gradient(img)
    w = np.exp(-alpha * np.abs(g))
    if img.ndim == 3:
        w = w.mean(axis=-1)
    return w


def mask_gradients(grad, weights):
    """Elementwise product of a gradient field with importance weights.

    Weights of shape ``(n_axes, *spatial)`` broadcast over a trailing
    channel axis of the gradient field if present.
    """
    g = np.asarray(grad, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape == g.shape:
        return g * w
    if g.ndim == w.ndim + 1 and g.shape[:-1] == w.shape:
        return g * w[..., None]
    raise ValueError(f"mask shape {w.shape} does not match gradient shape {g.shape}")
