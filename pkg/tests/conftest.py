import numpy as np
import pytest

from tpsmooth.grid import GrayFrame, Mask, ScalarField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sf(values) -> ScalarField:
    return ScalarField(np.atleast_2d(np.asarray(values, dtype=np.float64)))


def mask(values) -> Mask:
    return Mask(np.atleast_2d(np.asarray(values)))


def frame(values) -> GrayFrame:
    return GrayFrame(np.atleast_2d(np.asarray(values, dtype=np.float64)))


def random_prob_field(rng, h=16, w=16) -> ScalarField:
    return ScalarField(rng.random((h, w)))
