"""Dense two-frame optical flow plus the warping / consistency operators.

Flow estimation follows the classic dense polynomial-expansion algorithm
(Gaussian-weighted quadratic expansion, iterative refinement, coarse-to-fine
pyramid) via OpenCV's implementation. Everything downstream of the raw flow
field (warping, cycle-consistency residual, motion uncertainty) is computed
here in plain numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np
from scipy.ndimage import map_coordinates

from .errors import ConfigError, InvalidInputError
from .grid import FlowField, GrayFrame, ScalarField, require_same_shape


@dataclass(frozen=True)
class FlowParams:
    """Parameters of the coarse-to-fine dense flow estimator."""

    pyramid_levels: int = 5
    pyramid_scale: float = 0.5
    window_radius: int = 7  # 15x15 Gaussian weighting window
    iterations_per_level: int = 3
    poly_neighborhood: int = 5
    poly_sigma: float = 1.1

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise ConfigError("pyramid_levels must be >= 1")
        if not (0.0 < self.pyramid_scale < 1.0):
            raise ConfigError("pyramid_scale must lie in (0, 1)")
        if self.window_radius < 1:
            raise ConfigError("window_radius must be >= 1")
        if self.iterations_per_level < 1:
            raise ConfigError("iterations_per_level must be >= 1")
        if self.poly_neighborhood < 3 or self.poly_neighborhood % 2 == 0:
            raise ConfigError("poly_neighborhood must be odd and >= 3")
        if self.poly_sigma <= 0.0:
            raise ConfigError("poly_sigma must be > 0")


@dataclass(frozen=True)
class MotionUncertaintyParams:
    """Mapping from cycle-consistency residuals to a [0, 1) uncertainty plane."""

    sigma_floor: float = 0.5
    use_adaptive_sigma: bool = True

    def __post_init__(self):
        if self.sigma_floor <= 0.0:
            raise ConfigError("sigma_floor must be > 0")


def _to_u8(frame: GrayFrame) -> np.ndarray:
    return np.clip(np.rint(frame.intensity), 0, 255).astype(np.uint8)


def estimate_flow(prev: GrayFrame, nxt: GrayFrame, params: FlowParams | None = None) -> FlowField:
    """Dense displacement field from ``prev`` to ``nxt`` in pixels per frame.

    Bit-identical frames short-circuit to the exact zero field; the solver
    itself only reaches near-zero on identical inputs.
    """
    params = params or FlowParams()
    h, w = require_same_shape(prev, nxt)
    if min(h, w) < params.poly_neighborhood:
        raise InvalidInputError(
            f"frame {w}x{h} is smaller than the {params.poly_neighborhood}px expansion neighborhood"
        )
    if np.array_equal(prev.intensity, nxt.intensity):
        return FlowField(u=np.zeros((h, w)), v=np.zeros((h, w)))
    raw = cv2.calcOpticalFlowFarneback(
        _to_u8(prev),
        _to_u8(nxt),
        None,
        pyr_scale=params.pyramid_scale,
        levels=params.pyramid_levels,
        winsize=2 * params.window_radius + 1,
        iterations=params.iterations_per_level,
        poly_n=params.poly_neighborhood,
        poly_sigma=params.poly_sigma,
        flags=cv2.OPTFLOW_FARNEBACK_GAUSSIAN,
    )
    return FlowField(u=raw[..., 0], v=raw[..., 1])


def warp_backward(field: ScalarField, flow: FlowField) -> ScalarField:
    """Sample ``field`` at x - flow(x) with bilinear interpolation.

    A sample whose 2x2 bilinear support is not fully inside the grid yields 0
    (all-or-nothing out-of-bound policy). With zero flow this is a bit-exact
    identity.
    """
    h, w = require_same_shape(field, flow)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = xs - flow.u
    sy = ys - flow.v

    inside = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    # Clamp the lattice cell so exact right/bottom edge samples keep full support.
    x0 = np.clip(np.floor(sx), 0, max(w - 2, 0)).astype(np.intp)
    y0 = np.clip(np.floor(sy), 0, max(h - 2, 0)).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.where(inside, sx - x0, 0.0)
    fy = np.where(inside, sy - y0, 0.0)

    d = field.data
    top = d[y0, x0] * (1.0 - fx) + d[y0, x1] * fx
    bot = d[y1, x0] * (1.0 - fx) + d[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return ScalarField(np.where(inside, out, 0.0))


def flow_residual(fwd: FlowField, bwd: FlowField) -> ScalarField:
    """Forward-backward cycle residual |fwd(x) + bwd(x + fwd(x))| per pixel.

    The backward field is sampled bilinearly at the forward target; lookups
    outside the grid clamp to the nearest edge.
    """
    h, w = require_same_shape(fwd, bwd)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = np.stack([ys + fwd.v, xs + fwd.u])
    bu = map_coordinates(bwd.u, coords, order=1, mode="nearest")
    bv = map_coordinates(bwd.v, coords, order=1, mode="nearest")
    return ScalarField(np.hypot(fwd.u + bu, fwd.v + bv))


def motion_uncertainty(residual: ScalarField, params: MotionUncertaintyParams | None = None) -> ScalarField:
    """Map residual magnitudes into [0, 1) via 1 - exp(-E^2 / (2 sigma^2)).

    With adaptive sigma, sigma is the frame's median residual, floored at
    ``sigma_floor`` so static scenes do not blow up to full uncertainty.
    """
    params = params or MotionUncertaintyParams()
    if residual.data.min() < 0.0:
        raise InvalidInputError("residual plane must be non-negative")
    sigma = params.sigma_floor
    if params.use_adaptive_sigma:
        sigma = max(float(np.median(residual.data)), params.sigma_floor)
    q = 1.0 - np.exp(-np.square(residual.data) / (2.0 * sigma * sigma))
    return ScalarField(q)


def mean_flow_magnitude(flow: FlowField) -> float:
    """Mean per-pixel L2 norm of the flow field."""
    return float(np.hypot(flow.u, flow.v).mean(dtype=np.float64))
