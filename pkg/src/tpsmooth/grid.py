"""Value-semantic dense grid types and pure per-pixel transforms.

All types copy their input on construction and freeze the underlying
array, so instances can be shared across threads without defensive
copying. Planes are held as float64 in memory; the on-disk containers
(see :mod:`tpsmooth.formats`) store 32-bit floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, InvalidInputError

REC601_WEIGHTS = (0.299, 0.587, 0.114)


def _as_grid(data, dtype, name: str) -> np.ndarray:
    arr = np.array(data, dtype=dtype, copy=True)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a 2-D grid, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be at least 1x1, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _require_finite(arr: np.ndarray, name: str) -> None:
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains NaN or Inf")


@dataclass(frozen=True)
class ScalarField:
    """H x W grid of real values (probability, entropy, residual or weight plane)."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_grid(self.data, np.float64, "ScalarField")
        _require_finite(arr, "ScalarField")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def require_probability(self, name: str = "field") -> "ScalarField":
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise InvalidInputError(f"{name} is not a probability plane (values outside [0, 1])")
        return self


@dataclass(frozen=True)
class Mask:
    """H x W binary grid."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.dtype != bool and raw.size and not np.isin(np.unique(raw), (0, 1)).all():
            raise InvalidInputError("Mask values must all be 0 or 1")
        arr = _as_grid(raw.astype(bool), bool, "Mask")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def count(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class FlowField:
    """H x W grid of 2-vectors, in pixels per frame. u is horizontal, v vertical."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = _as_grid(self.u, np.float64, "FlowField.u")
        v = _as_grid(self.v, np.float64, "FlowField.v")
        if u.shape != v.shape:
            raise InvalidInputError(f"FlowField planes disagree: u {u.shape} vs v {v.shape}")
        _require_finite(u, "FlowField.u")
        _require_finite(v, "FlowField.v")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape


@dataclass(frozen=True)
class GrayFrame:
    """H x W luminance frame with real intensities in [0, 255]."""

    intensity: np.ndarray

    def __post_init__(self):
        arr = _as_grid(self.intensity, np.float64, "GrayFrame")
        _require_finite(arr, "GrayFrame")
        if arr.min() < 0.0 or arr.max() > 255.0:
            raise InvalidInputError("GrayFrame intensities must lie in [0, 255]")
        object.__setattr__(self, "intensity", arr)

    @property
    def width(self) -> int:
        return self.intensity.shape[1]

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.intensity.shape


def require_same_shape(*grids) -> tuple[int, int]:
    shapes = {g.shape for g in grids}
    if len(shapes) > 1:
        raise InvalidInputError(f"shape mismatch: {sorted(shapes)}")
    return next(iter(shapes))


def luminance(red, green, blue) -> GrayFrame:
    """Reduce RGB planes to a single luminance plane with Rec.601 weights."""
    r = np.asarray(red, dtype=np.float64)
    g = np.asarray(green, dtype=np.float64)
    b = np.asarray(blue, dtype=np.float64)
    if not (r.shape == g.shape == b.shape):
        raise InvalidInputError("RGB planes must share one shape")
    wr, wg, wb = REC601_WEIGHTS
    return GrayFrame(wr * r + wg * g + wb * b)


def sigmoid_map(logits: ScalarField) -> ScalarField:
    """Per-pixel logistic transform 1 / (1 + e^-x) of a logit plane."""
    return ScalarField(expit(logits.data))


def threshold_mask(prob: ScalarField, tau: float) -> Mask:
    """Binarize a probability plane; a pixel is foreground iff prob > tau (strict)."""
    if not (0.0 < tau < 1.0):
        raise ConfigError(f"threshold must lie strictly inside (0, 1), got {tau}")
    prob.require_probability("threshold_mask input")
    return Mask(prob.data > tau)
