"""Per-frame refinement recursion: entropy, adaptive blending, clipped fusion.

The recursion keeps only the previous frame's refined planes, so a sequence
of any length runs in O(1) memory. Objects share one motion-uncertainty
plane per frame (flow is frame-level); entropy and blending are per object.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr

from .errors import ConfigError, InvalidInputError, SequencingError
from .flow import (
    FlowParams,
    MotionUncertaintyParams,
    estimate_flow,
    flow_residual,
    mean_flow_magnitude,
    motion_uncertainty,
    warp_backward,
)
from .grid import GrayFrame, Mask, ScalarField, require_same_shape, threshold_mask

LN2 = float(np.log(2.0))

MODE_ADAPTIVE = "adaptive"
MODE_FIXED = "fixed"
MODE_PASSTHROUGH = "passthrough"


def parse_fusion_mode(text: str) -> tuple[str, float | None]:
    """Parse ``adaptive``, ``passthrough``, or ``fixed:<w>`` into (mode, weight)."""
    if text == MODE_ADAPTIVE:
        return MODE_ADAPTIVE, None
    if text == MODE_PASSTHROUGH:
        return MODE_PASSTHROUGH, None
    if text.startswith(MODE_FIXED + ":"):
        try:
            w = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad fixed fusion weight in {text!r}") from exc
        return MODE_FIXED, w
    raise ConfigError(f"unknown fusion mode {text!r} (want adaptive, passthrough, or fixed:<w>)")


@dataclass(frozen=True)
class FusionParams:
    """Knobs of the adaptive blend, including the ablation switches."""

    epsilon: float = 1e-6
    kappa_min: float = 0.05
    kappa_max: float = 0.95
    normalize_entropy: bool = False
    fusion_mode: str = MODE_ADAPTIVE  # adaptive | passthrough | fixed
    fixed_weight: float | None = None
    disable_motion_uncertainty: bool = False
    disable_entropy: bool = False

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be > 0")
        if not (0.0 <= self.kappa_min < self.kappa_max <= 1.0):
            raise ConfigError("need 0 <= kappa_min < kappa_max <= 1")
        if self.fusion_mode not in (MODE_ADAPTIVE, MODE_FIXED, MODE_PASSTHROUGH):
            raise ConfigError(f"unknown fusion mode {self.fusion_mode!r}")
        if self.fusion_mode == MODE_FIXED:
            if self.fixed_weight is None or not (0.0 <= self.fixed_weight <= 1.0):
                raise ConfigError("fixed fusion mode needs a weight in [0, 1]")


@dataclass(frozen=True)
class SmootherState:
    """Carries the previous frame's refined planes between steps."""

    previous_refined: dict[int, ScalarField] | None = None
    frame_index: int = 0


@dataclass
class StepDiagnostics:
    """Intermediate planes of one refinement step, for reporting and checks."""

    frame_index: int
    flow_mag: float | None = None
    residual: ScalarField | None = None
    motion_unc: ScalarField | None = None
    entropy: dict[int, ScalarField] = field(default_factory=dict)
    blend: dict[int, ScalarField] = field(default_factory=dict)
    warped_prior: dict[int, ScalarField] = field(default_factory=dict)

    def scalar_row(self, object_id: int) -> dict[str, float | None]:
        def m(plane):
            return None if plane is None else float(plane.data.mean(dtype=np.float64))

        return {
            "flow_mag": self.flow_mag,
            "mean_residual": m(self.residual),
            "mean_motion_unc": m(self.motion_unc),
            "mean_entropy": m(self.entropy.get(object_id)),
            "mean_blend": m(self.blend.get(object_id)),
        }


@dataclass
class FrameResult:
    frame_index: int
    refined: dict[int, ScalarField]
    masks: dict[int, Mask]
    diagnostics: StepDiagnostics


def entropy_map(prob: ScalarField, normalize: bool = False) -> ScalarField:
    """Binary entropy -P ln P - (1-P) ln (1-P) with 0 ln 0 := 0.

    Natural log, so the range is [0, ln 2]; ``normalize`` divides by ln 2.
    """
    prob.require_probability("entropy_map input")
    p = prob.data
    r = entr(p) + entr(1.0 - p)
    if normalize:
        r = r / LN2
    return ScalarField(np.maximum(r, 0.0))


def blend_coefficient(q: ScalarField, r: ScalarField, params: FusionParams) -> ScalarField:
    """Clipped blending weight K = clip(Q / (Q + R + eps), kappa_min, kappa_max).

    The ablation switches replace either uncertainty channel with the
    constant 0.5 before the quotient.
    """
    require_same_shape(q, r)
    if q.data.min() < 0.0 or r.data.min() < 0.0:
        raise InvalidInputError("uncertainty planes must be non-negative")
    qd = np.full_like(q.data, 0.5) if params.disable_motion_uncertainty else q.data
    rd = np.full_like(r.data, 0.5) if params.disable_entropy else r.data
    k = qd / (qd + rd + params.epsilon)
    return ScalarField(np.clip(k, params.kappa_min, params.kappa_max))


def fuse(current: ScalarField, warped_prior: ScalarField, k: ScalarField) -> ScalarField:
    """Convex blend K*P + (1-K)*P~, evaluated as P~ + K*(P - P~).

    The incremental form makes equal inputs an exact fixed point.
    """
    require_same_shape(current, warped_prior, k)
    fused = warped_prior.data + k.data * (current.data - warped_prior.data)
    return ScalarField(fused)


def _verify_step(current: ScalarField, warped: ScalarField, refined: ScalarField,
                 k: ScalarField, params: FusionParams) -> None:
    lo = np.minimum(current.data, warped.data)
    hi = np.maximum(current.data, warped.data)
    within = (refined.data >= np.nextafter(lo, -np.inf)) & (refined.data <= np.nextafter(hi, np.inf))
    if not within.all():
        raise AssertionError("fusion convexity violated beyond 1 ulp")
    if k.data.min() < params.kappa_min or k.data.max() > params.kappa_max:
        raise AssertionError("blend coefficient escaped its clip bounds")


def smooth_step(
    state: SmootherState,
    prev_frame: GrayFrame | None,
    cur_frame: GrayFrame,
    current_probs: dict[int, ScalarField],
    flow_params: FlowParams | None = None,
    motion_params: MotionUncertaintyParams | None = None,
    fusion_params: FusionParams | None = None,
    verify: bool = False,
) -> tuple[dict[int, ScalarField], SmootherState, StepDiagnostics]:
    """Advance the recursion by one frame.

    The first frame (no prior in ``state``) passes through unchanged; later
    frames compute forward/backward flow between ``prev_frame`` and
    ``cur_frame``, warp each object's previous refined plane, and blend.
    """
    flow_params = flow_params or FlowParams()
    motion_params = motion_params or MotionUncertaintyParams()
    fusion_params = fusion_params or FusionParams()

    for oid, prob in current_probs.items():
        require_same_shape(prob, cur_frame)
        prob.require_probability(f"probability plane for object {oid}")

    diag = StepDiagnostics(frame_index=state.frame_index)
    next_state_index = state.frame_index + 1

    if fusion_params.fusion_mode == MODE_PASSTHROUGH:
        return dict(current_probs), SmootherState(dict(current_probs), next_state_index), diag

    if state.previous_refined is None:
        if state.frame_index != 0:
            raise SequencingError(f"no prior planes at frame {state.frame_index}")
        return dict(current_probs), SmootherState(dict(current_probs), next_state_index), diag

    if prev_frame is None:
        raise SequencingError(f"previous frame required at frame {state.frame_index}")
    require_same_shape(prev_frame, cur_frame)
    if set(state.previous_refined) != set(current_probs):
        raise SequencingError("object ids changed between frames")

    fwd = estimate_flow(prev_frame, cur_frame, flow_params)
    bwd = estimate_flow(cur_frame, prev_frame, flow_params)
    residual = flow_residual(fwd, bwd)
    q = motion_uncertainty(residual, motion_params)
    diag.flow_mag = mean_flow_magnitude(fwd)
    diag.residual = residual
    diag.motion_unc = q

    refined: dict[int, ScalarField] = {}
    for oid, prob in current_probs.items():
        warped = warp_backward(state.previous_refined[oid], fwd)
        if fusion_params.fusion_mode == MODE_FIXED:
            w = float(np.clip(fusion_params.fixed_weight, fusion_params.kappa_min, fusion_params.kappa_max))
            k = ScalarField(np.full(prob.shape, w))
            r = None
        else:
            r = entropy_map(prob, normalize=fusion_params.normalize_entropy)
            k = blend_coefficient(q, r, fusion_params)
        out = fuse(prob, warped, k)
        if verify:
            _verify_step(prob, warped, out, k, fusion_params)
        refined[oid] = out
        if r is not None:
            diag.entropy[oid] = r
        diag.blend[oid] = k
        diag.warped_prior[oid] = warped

    return refined, SmootherState(refined, next_state_index), diag


def run_sequence(
    frames,
    probs,
    flow_params: FlowParams | None = None,
    motion_params: MotionUncertaintyParams | None = None,
    fusion_params: FusionParams | None = None,
    threshold: float = 0.5,
    verify: bool = False,
    expected_frames: int | None = None,
):
    """Sequentially refine a (frame, probability-planes) stream.

    ``frames`` and ``probs`` are equal-length iterables of
    :class:`GrayFrame` and per-object plane dicts. Yields one
    :class:`FrameResult` per frame; only the previous refined planes are
    retained between frames.
    """
    state = SmootherState()
    prev_frame: GrayFrame | None = None
    sentinel = object()
    frame_it = iter(frames)
    prob_it = iter(probs)
    while True:
        frame = next(frame_it, sentinel)
        prob = next(prob_it, sentinel)
        if frame is sentinel and prob is sentinel:
            break
        if frame is sentinel or prob is sentinel:
            raise InvalidInputError("frame and probability streams have different lengths")
        refined, state, diag = smooth_step(
            state, prev_frame, frame, prob, flow_params, motion_params, fusion_params, verify
        )
        masks = {oid: threshold_mask(plane, threshold) for oid, plane in refined.items()}
        yield FrameResult(diag.frame_index, refined, masks, diag)
        prev_frame = frame
    if expected_frames is not None and state.frame_index != expected_frames:
        raise InvalidInputError(
            f"sequence yielded {state.frame_index} frames, manifest declares {expected_frames}"
        )


__all__ = [
    "FusionParams",
    "SmootherState",
    "StepDiagnostics",
    "FrameResult",
    "entropy_map",
    "blend_coefficient",
    "fuse",
    "smooth_step",
    "run_sequence",
    "parse_fusion_mode",
    "MODE_ADAPTIVE",
    "MODE_FIXED",
    "MODE_PASSTHROUGH",
    "LN2",
]
