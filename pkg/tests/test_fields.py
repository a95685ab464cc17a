import numpy as np
import pytest

from unrolltv.fields import (
    check_field,
    edge_mask,
    gradient_adjoint,
    mask_gradients,
    spatial_axes,
    spatial_gradient,
)


def test_check_field_coerces_to_float64():
    out = check_field([1, 2, 3])
    assert out.dtype == np.float64
    np.testing.assert_array_equal(out, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("bad", [np.zeros((2, 2, 2, 2)), 5.0, np.array([])])
def test_check_field_rejects_bad_shapes(bad):
    with pytest.raises(ValueError):
        check_field(bad)


def test_check_field_rejects_nonfinite_and_names_the_field():
    with pytest.raises(ValueError, match="signal"):
        check_field([1.0, np.nan], name="signal")


def test_spatial_axes():
    assert spatial_axes(np.zeros(4)) == (0,)
    assert spatial_axes(np.zeros((4, 5))) == (0, 1)
    assert spatial_axes(np.zeros((4, 5, 3))) == (0, 1)


def test_spatial_gradient_1d_forward_differences():
    g = spatial_gradient(np.array([1.0, 4.0, 9.0]))
    assert g.shape == (1, 3)
    np.testing.assert_array_equal(g[0], [3.0, 5.0, 0.0])  # last slot padded


def test_spatial_gradient_2d_shapes_and_values():
    f = np.arange(12.0).reshape(3, 4)
    g = spatial_gradient(f)
    assert g.shape == (2, 3, 4)
    np.testing.assert_array_equal(g[0][:-1], np.diff(f, axis=0))
    np.testing.assert_array_equal(g[0][-1], 0.0)
    np.testing.assert_array_equal(g[1][:, :-1], np.diff(f, axis=1))
    np.testing.assert_array_equal(g[1][:, -1], 0.0)


def test_constant_field_has_zero_gradient():
    assert not spatial_gradient(np.full((6, 7), 2.5)).any()


@pytest.mark.parametrize("shape", [(9,), (5, 6), (4, 5, 3)])
def test_adjoint_identity(shape):
    # <grad f, u> == <f, adjoint u> for random f, u
    rng = np.random.default_rng(7)
    f = rng.standard_normal(shape)
    g = spatial_gradient(f)
    u = rng.standard_normal(g.shape)
    lhs = np.sum(g * u)
    rhs = np.sum(f * gradient_adjoint(u))
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_adjoint_ignores_dead_boundary_slots():
    # the padded last slot of each axis never affects the adjoint
    u = np.zeros((1, 4))
    u[0, -1] = 123.0
    np.testing.assert_array_equal(gradient_adjoint(u), np.zeros(4))


def test_adjoint_rejects_unstacked_input():
    with pytest.raises(ValueError):
        gradient_adjoint(np.zeros(5))


def test_edge_mask_alpha_zero_is_ones():
    img = np.random.default_rng(0).random((5, 5))
    np.testing.assert_array_equal(edge_mask(img, 0.0), np.ones((2, 5, 5)))


def test_edge_mask_constant_image_is_ones():
    assert (edge_mask(np.full((4, 6), 3.0), 10.0) == 1.0).all()


def test_edge_mask_suppresses_edges():
    img = np.zeros((4, 8))
    img[:, 4:] = 1.0
    w = edge_mask(img, 8.0)
    assert w.shape == (2, 4, 8)
    # across the step the weight drops, elsewhere it stays 1
    assert np.all(w[1][:, 3] == pytest.approx(np.exp(-8.0)))
    assert np.all(w[1][:, :3] == 1.0)
    assert np.all(w[0] == 1.0)


def test_edge_mask_channel_average():
    rgb = np.zeros((4, 4, 3))
    rgb[:, 2:, 0] = 1.0  # edge only in the first channel
    w = edge_mask(rgb, 3.0)
    assert w.shape == (2, 4, 4)
    expected = (np.exp(-3.0) + 1.0 + 1.0) / 3.0
    assert w[1][0, 1] == pytest.approx(expected)


def test_edge_mask_rejects_negative_alpha():
    with pytest.raises(ValueError):
        edge_mask(np.zeros((3, 3)), -1.0)


def test_mask_gradients_exact_and_broadcast():
    g = np.ones((2, 3, 3))
    w = np.full((2, 3, 3), 0.5)
    np.testing.assert_array_equal(mask_gradients(g, w), np.full((2, 3, 3), 0.5))
    gc = np.ones((2, 3, 3, 4))
    np.testing.assert_array_equal(mask_gradients(gc, w), np.full((2, 3, 3, 4), 0.5))


def test_mask_gradients_shape_mismatch():
    with pytest.raises(ValueError):
        mask_gradients(np.ones((2, 3, 3)), np.ones((2, 4, 4)))
