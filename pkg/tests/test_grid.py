import numpy as np
import pytest

from tpsmooth.errors import ConfigError, InvalidInputError
from tpsmooth.grid import GrayFrame, Mask, ScalarField, luminance, sigmoid_map, threshold_mask

from conftest import sf


def test_sigmoid_zero_is_half():
    out = sigmoid_map(sf([[0.0]]))
    assert out.data[0, 0] == 0.5


def test_sigmoid_saturates_at_large_logit():
    out = sigmoid_map(sf([[50.0]]))
    assert abs(out.data[0, 0] - 1.0) < 1e-9


def test_sigmoid_closed_form_value():
    # 1/(1+e^-2) evaluated independently at high precision
    out = sigmoid_map(sf([[2.0]]))
    assert out.data[0, 0] == pytest.approx(0.8807970779778824, abs=1e-12)


def test_sigmoid_monotone_per_pixel(rng):
    x = np.sort(rng.normal(0, 4, size=(1, 257)))
    out = sigmoid_map(ScalarField(x)).data[0]
    assert (np.diff(out) > 0).all()


def test_sigmoid_symmetry_sums_to_one(rng):
    x = rng.normal(0, 6, size=(40, 40))
    total = sigmoid_map(ScalarField(x)).data + sigmoid_map(ScalarField(-x)).data
    assert np.abs(total - 1.0).max() < 1e-12


def test_sigmoid_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        ScalarField(np.array([[np.nan]]))
    with pytest.raises(InvalidInputError):
        ScalarField(np.array([[np.inf]]))


def test_threshold_strict_inequality():
    out = threshold_mask(sf([[0.5, 0.5]]), 0.5)
    assert not out.data.any()
    out = threshold_mask(sf([[0.51, 0.51]]), 0.5)
    assert out.data.all()


def test_threshold_example_values():
    out = threshold_mask(sf([[0.2, 0.8, 0.5001]]), 0.5)
    assert out.data.tolist() == [[False, True, True]]


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.2, 1.5])
def test_threshold_rejects_bad_tau(tau):
    with pytest.raises(ConfigError):
        threshold_mask(sf([[0.5]]), tau)


@pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
def test_threshold_idempotent_on_binary_output(rng, tau):
    probs = ScalarField(rng.random((8, 8)))
    once = threshold_mask(probs, tau)
    again = threshold_mask(ScalarField(once.data.astype(np.float64)), tau)
    assert np.array_equal(once.data, again.data)


def test_threshold_rejects_non_probability_plane():
    with pytest.raises(InvalidInputError):
        threshold_mask(sf([[1.5]]), 0.5)


def test_scalar_field_value_semantics():
    src = np.zeros((2, 2))
    field = ScalarField(src)
    src[0, 0] = 7.0
    assert field.data[0, 0] == 0.0
    with pytest.raises(ValueError):
        field.data[0, 0] = 1.0  # stored array is frozen


def test_mask_rejects_non_binary_values():
    with pytest.raises(InvalidInputError):
        Mask(np.array([[0, 2]]))


def test_grayframe_rejects_out_of_range():
    with pytest.raises(InvalidInputError):
        GrayFrame(np.array([[-1.0]]))
    with pytest.raises(InvalidInputError):
        GrayFrame(np.array([[256.0]]))


def test_grid_rejects_empty_and_non_2d():
    with pytest.raises(InvalidInputError):
        ScalarField(np.zeros((0, 3)))
    with pytest.raises(InvalidInputError):
        ScalarField(np.zeros(4))


def test_luminance_rec601_weights():
    gray = luminance([[100.0]], [[100.0]], [[100.0]])
    assert gray.intensity[0, 0] == pytest.approx(100.0)
    gray = luminance([[255.0]], [[0.0]], [[0.0]])
    assert gray.intensity[0, 0] == pytest.approx(0.299 * 255.0)
