import math

import numpy as np
import pytest

from tpsmooth.errors import ConfigError, InvalidInputError
from tpsmooth.flow import (
    FlowParams,
    MotionUncertaintyParams,
    estimate_flow,
    flow_residual,
    mean_flow_magnitude,
    motion_uncertainty,
    warp_backward,
)
from tpsmooth.grid import FlowField, GrayFrame, ScalarField
from tpsmooth.synth import translation_pair

from conftest import sf

INTERIOR = 12  # crop margin for endpoint-error checks


def constant_flow(h, w, u, v):
    return FlowField(u=np.full((h, w), float(u)), v=np.full((h, w), float(v)))


def interior_epe(flow, dx, dy, margin=INTERIOR):
    err = np.hypot(flow.u - dx, flow.v - dy)
    return err[margin:-margin, margin:-margin].mean()


# --- estimate_flow -----------------------------------------------------------


def test_identity_pair_has_near_zero_flow():
    prev, _, _ = translation_pair(96, 96, (0, 0), seed=3)
    flow = estimate_flow(prev, prev)
    assert mean_flow_magnitude(flow) < 0.05


@pytest.mark.parametrize("shift", [(3, 0), (0, -2)])
def test_translation_recovered_within_quarter_pixel(shift):
    prev, nxt, gt = translation_pair(96, 96, shift, seed=11)
    flow = estimate_flow(prev, nxt)
    assert interior_epe(flow, *shift) < 0.25
    assert gt.u[0, 0] == shift[0] and gt.v[0, 0] == shift[1]


def test_estimate_flow_rejects_shape_mismatch():
    a = GrayFrame(np.zeros((16, 16)))
    b = GrayFrame(np.zeros((16, 17)))
    with pytest.raises(InvalidInputError):
        estimate_flow(a, b)


def test_estimate_flow_rejects_tiny_frames():
    a = GrayFrame(np.zeros((3, 3)))
    with pytest.raises(InvalidInputError):
        estimate_flow(a, a, FlowParams(poly_neighborhood=5))


def test_flow_params_validation():
    with pytest.raises(ConfigError):
        FlowParams(pyramid_scale=1.0)
    with pytest.raises(ConfigError):
        FlowParams(poly_neighborhood=4)
    with pytest.raises(ConfigError):
        FlowParams(pyramid_levels=0)


def test_estimate_flow_deterministic():
    prev, nxt, _ = translation_pair(64, 64, (2, 1), seed=5)
    f1 = estimate_flow(prev, nxt)
    f2 = estimate_flow(prev, nxt)
    assert np.array_equal(f1.u, f2.u) and np.array_equal(f1.v, f2.v)


# --- warp_backward -----------------------------------------------------------


def test_zero_flow_warp_is_bit_identity(rng):
    field = ScalarField(rng.random((13, 17)))
    out = warp_backward(field, constant_flow(13, 17, 0.0, 0.0))
    assert np.array_equal(out.data, field.data)


def test_warp_hand_bilinear_1x2():
    # pixel (1,0) with flow (1,0) samples position 0 -> value a
    field = sf([[0.25, 0.75]])
    flow = FlowField(u=np.array([[0.0, 1.0]]), v=np.zeros((1, 2)))
    out = warp_backward(field, flow)
    assert out.data[0, 1] == 0.25
    assert out.data[0, 0] == 0.25  # untouched pixel keeps its own value


def test_warp_all_out_of_bounds_yields_zero(rng):
    field = ScalarField(rng.random((8, 8)))
    out = warp_backward(field, constant_flow(8, 8, 100.0, -50.0))
    assert not out.data.any()


def test_warp_partial_support_is_zero():
    # sample at x = -0.5: support {-1, 0} is partially outside -> 0
    field = sf([[0.8, 0.8]])
    flow = FlowField(u=np.array([[0.5, 0.0]]), v=np.zeros((1, 2)))
    out = warp_backward(field, flow)
    assert out.data[0, 0] == 0.0


def test_warp_subpixel_interpolation():
    field = sf([[0.0, 1.0]])
    flow = FlowField(u=np.array([[0.0, 0.25]]), v=np.zeros((1, 2)))
    out = warp_backward(field, flow)
    assert out.data[0, 1] == pytest.approx(0.75, abs=1e-15)


def test_warp_probability_stays_in_unit_interval(rng):
    field = ScalarField(rng.random((24, 24)))
    flow = FlowField(u=rng.normal(0, 3, (24, 24)), v=rng.normal(0, 3, (24, 24)))
    out = warp_backward(field, flow)
    assert out.data.min() >= 0.0 and out.data.max() <= 1.0


def test_warp_rejects_shape_mismatch(rng):
    with pytest.raises(InvalidInputError):
        warp_backward(ScalarField(rng.random((4, 4))), constant_flow(4, 5, 0, 0))


# --- flow_residual -----------------------------------------------------------


def test_residual_zero_for_perfect_cycle():
    fwd = constant_flow(10, 10, 2.0, -1.0)
    bwd = constant_flow(10, 10, -2.0, 1.0)
    res = flow_residual(fwd, bwd)
    assert np.abs(res.data).max() < 1e-12


def test_residual_constant_offset():
    fwd = constant_flow(12, 12, 2.0, 0.0)
    bwd = constant_flow(12, 12, -1.0, 0.0)
    res = flow_residual(fwd, bwd)
    assert np.allclose(res.data, 1.0)


def test_residual_three_four_five():
    fwd = constant_flow(9, 9, 3.0, 4.0)
    bwd = constant_flow(9, 9, 0.0, 0.0)
    res = flow_residual(fwd, bwd)
    assert np.allclose(res.data, 5.0)


def test_residual_is_nonnegative(rng):
    fwd = FlowField(u=rng.normal(0, 2, (16, 16)), v=rng.normal(0, 2, (16, 16)))
    bwd = FlowField(u=rng.normal(0, 2, (16, 16)), v=rng.normal(0, 2, (16, 16)))
    assert flow_residual(fwd, bwd).data.min() >= 0.0


# --- motion_uncertainty ------------------------------------------------------


def test_uncertainty_zero_residual_maps_to_zero():
    res = sf(np.zeros((4, 4)))
    q = motion_uncertainty(res, MotionUncertaintyParams(sigma_floor=0.5))
    assert not q.data.any()


def test_uncertainty_closed_form_at_sigma():
    sigma = 0.5
    res = sf(np.full((3, 3), sigma))
    q = motion_uncertainty(res, MotionUncertaintyParams(sigma_floor=sigma, use_adaptive_sigma=False))
    assert q.data[0, 0] == pytest.approx(0.3934693402873666, abs=1e-12)


def test_uncertainty_closed_form_at_three_sigma():
    arr = np.zeros((10, 10))
    arr[0, 0] = 1.5  # median stays 0 -> sigma = floor = 0.5, residual = 3 sigma
    q = motion_uncertainty(sf(arr), MotionUncertaintyParams(sigma_floor=0.5))
    assert q.data[0, 0] == pytest.approx(0.988891003461758, abs=1e-12)


def test_uncertainty_adaptive_sigma_uses_median():
    arr = np.full((5, 5), 2.0)
    q = motion_uncertainty(sf(arr), MotionUncertaintyParams(sigma_floor=0.5))
    # sigma = median = 2 -> residual = sigma -> 1 - e^(-1/2)
    assert q.data[0, 0] == pytest.approx(0.3934693402873666, abs=1e-12)


def test_uncertainty_monotone_and_bounded(rng):
    values = np.sort(rng.random((1, 300)) * 3)
    q = motion_uncertainty(
        ScalarField(values), MotionUncertaintyParams(sigma_floor=0.7, use_adaptive_sigma=False)
    ).data[0]
    assert (np.diff(q) >= 0).all()
    assert q.min() >= 0.0 and q.max() < 1.0


def test_uncertainty_rejects_negative_residual():
    with pytest.raises(InvalidInputError):
        motion_uncertainty(sf([[-0.1]]), MotionUncertaintyParams())


# --- mean_flow_magnitude -----------------------------------------------------


def test_magnitude_zero_flow():
    assert mean_flow_magnitude(constant_flow(6, 6, 0, 0)) == 0.0


def test_magnitude_pythagorean():
    assert mean_flow_magnitude(constant_flow(6, 6, 3.0, 4.0)) == pytest.approx(5.0)


def test_magnitude_mixed_average():
    u = np.zeros((2, 2))
    u[0, :] = 1.0
    flow = FlowField(u=u, v=np.zeros((2, 2)))
    assert mean_flow_magnitude(flow) == pytest.approx(0.5)
