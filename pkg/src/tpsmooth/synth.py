"""Seeded synthetic benchmark: moving textured shapes with ground truth.

Scenes render anti-aliased disks/rectangles over a static textured
background, with analytic per-frame masks and flow. Degradation injects
the instability modes the smoother is meant to fix (logit noise, random
per-frame jitter of the probability map, flicker scaling, dropout).

Randomness uses numpy's PCG64 via SeedSequence; every degradation channel
and frame/object gets its own substream, so enabling one channel never
perturbs another and generation order does not matter. The spawn keys are
part of the reproducibility contract: degradation draws come from
SeedSequence(seed, spawn_key=(channel, frame, object)) with channel ids
0 = noise, 1 = jitter, 2 = flicker, 3 = dropout; textures use
SeedSequence(texture_seed, spawn_key=(4,)) for the background and
(5, shape_index) for shape patches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates
from scipy.special import expit

from .errors import ConfigError, SceneError
from .grid import FlowField, GrayFrame, Mask, ScalarField

LOGIT_AMPLITUDE = 4.0  # sigmoid(4) ~ 0.982: clean to threshold, soft enough to perturb

_CHANNEL_NOISE = 0
_CHANNEL_JITTER = 1
_CHANNEL_FLICKER = 2
_CHANNEL_DROPOUT = 3
_CHANNEL_BACKGROUND = 4
_CHANNEL_SHAPE_TEXTURE = 5


@dataclass(frozen=True)
class ShapeSpec:
    """One moving shape. ``size`` is a disk radius or a (width, height) pair."""

    kind: str  # disk | rectangle
    size: float | tuple[float, float]
    center: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    motion: str = "linear"  # linear | sinusoidal
    amplitude: tuple[float, float] | None = None
    period: float | None = None
    phase: float = 0.0
    trajectory: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in ("disk", "rectangle"):
            raise ConfigError(f"unknown shape kind {self.kind!r}")
        if self.kind == "disk" and not np.isscalar(self.size):
            raise ConfigError("disk size must be a scalar radius")
        if self.kind == "rectangle" and np.isscalar(self.size):
            raise ConfigError("rectangle size must be a (width, height) pair")
        if self.motion not in ("linear", "sinusoidal"):
            raise ConfigError(f"unknown motion model {self.motion!r}")
        if self.motion == "sinusoidal" and self.trajectory is None:
            if self.amplitude is None or self.period is None or self.period <= 0:
                raise ConfigError("sinusoidal motion needs amplitude and a positive period")

    def half_extent(self) -> tuple[float, float]:
        if self.kind == "disk":
            return float(self.size), float(self.size)
        w, h = self.size
        return w / 2.0, h / 2.0

    def centers(self, frame_count: int) -> np.ndarray:
        if self.trajectory is not None:
            if len(self.trajectory) != frame_count:
                raise ConfigError(
                    f"explicit trajectory has {len(self.trajectory)} entries for {frame_count} frames"
                )
            return np.asarray(self.trajectory, dtype=np.float64)
        t = np.arange(frame_count, dtype=np.float64)
        cx, cy = self.center
        if self.motion == "linear":
            vx, vy = self.velocity
            return np.stack([cx + vx * t, cy + vy * t], axis=1)
        ax, ay = self.amplitude
        omega = 2.0 * math.pi / self.period
        return np.stack(
            [cx + ax * np.sin(omega * t + self.phase), cy + ay * np.cos(omega * t + self.phase)],
            axis=1,
        )


@dataclass(frozen=True)
class TextureSpec:
    seed: int = 0
    contrast: float = 45.0
    smoothness: float = 2.5

    def __post_init__(self):
        if self.contrast < 0:
            raise ConfigError("texture contrast must be >= 0")
        if self.smoothness <= 0:
            raise ConfigError("texture smoothness must be > 0")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    frame_count: int
    shapes: tuple[ShapeSpec, ...]
    texture: TextureSpec = TextureSpec()
    seed: int = 0
    border_margin: float = 4.0  # keep >= 2x the worst degradation jitter

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ConfigError("scene must be at least 8x8")
        if self.frame_count < 2:
            raise ConfigError("scene needs at least 2 frames")
        if not self.shapes:
            raise ConfigError("scene needs at least one shape")


@dataclass(frozen=True)
class DegradationSpec:
    logit_noise_std: float = 0.0
    jitter_std: float = 0.0
    flicker_prob: float = 0.0
    flicker_scale: float = 0.25
    dropout_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.logit_noise_std < 0 or self.jitter_std < 0:
            raise ConfigError("noise/jitter stds must be >= 0")
        if not (0.0 <= self.flicker_prob <= 1.0):
            raise ConfigError("flicker_prob must lie in [0, 1]")
        if not (0.0 < self.flicker_scale < 1.0):
            raise ConfigError("flicker_scale must lie in (0, 1)")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ConfigError("dropout_prob must lie in [0, 1]")


@dataclass
class GeneratedScene:
    frames: list[GrayFrame]
    gt_masks: list[dict[int, Mask]]  # per frame, keyed by object id (1-based)
    gt_flow: list[FlowField]  # gt_flow[t] maps frame t -> t+1
    object_ids: list[int] = field(default_factory=list)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _smooth_noise(shape: tuple[int, int], rng: np.random.Generator, smoothness: float) -> np.ndarray:
    noise = gaussian_filter(rng.standard_normal(shape), smoothness, mode="reflect")
    std = noise.std()
    if std > 0:
        noise = noise / std
    return noise


def _coverage(shape: ShapeSpec, center: np.ndarray, h: int, w: int) -> np.ndarray:
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = center
    if shape.kind == "disk":
        d = np.hypot(xs - cx, ys - cy)
        return np.clip(float(shape.size) + 0.5 - d, 0.0, 1.0)
    hw, hh = shape.half_extent()
    ax = np.clip(hw + 0.5 - np.abs(xs - cx), 0.0, 1.0)
    ay = np.clip(hh + 0.5 - np.abs(ys - cy), 0.0, 1.0)
    return ax * ay


def _shape_mask(shape: ShapeSpec, center: np.ndarray, h: int, w: int) -> np.ndarray:
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = center
    if shape.kind == "disk":
        return np.hypot(xs - cx, ys - cy) < float(shape.size)
    hw, hh = shape.half_extent()
    return (np.abs(xs - cx) < hw) & (np.abs(ys - cy) < hh)


def generate(scene: SceneSpec) -> GeneratedScene:
    """Render a scene to frames, per-object masks, and analytic flow."""
    h, w = scene.height, scene.width
    trajectories = [s.centers(scene.frame_count) for s in scene.shapes]

    for s, traj in zip(scene.shapes, trajectories):
        hw, hh = s.half_extent()
        for t, (cx, cy) in enumerate(traj):
            if (
                cx - hw < scene.border_margin
                or cx + hw > w - 1 - scene.border_margin
                or cy - hh < scene.border_margin
                or cy + hh > h - 1 - scene.border_margin
            ):
                raise SceneError(
                    f"{s.kind} leaves the {w}x{h} frame (margin {scene.border_margin}) at frame {t}"
                )

    bg_rng = _rng(scene.texture.seed, _CHANNEL_BACKGROUND)
    background = 128.0 + scene.texture.contrast * _smooth_noise((h, w), bg_rng, scene.texture.smoothness)

    # Per-shape local texture patch, rigidly attached to the shape center.
    patches = []
    for idx, s in enumerate(scene.shapes):
        hw, hh = s.half_extent()
        ph, pw = int(math.ceil(2 * hh)) + 5, int(math.ceil(2 * hw)) + 5
        tex_rng = _rng(scene.texture.seed, _CHANNEL_SHAPE_TEXTURE, idx)
        base = 200.0 if idx % 2 == 0 else 60.0
        patch = base + 0.6 * scene.texture.contrast * _smooth_noise((ph, pw), tex_rng, scene.texture.smoothness)
        patches.append(patch)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    frames: list[GrayFrame] = []
    gt_masks: list[dict[int, Mask]] = []
    for t in range(scene.frame_count):
        img = background.copy()
        masks: dict[int, Mask] = {}
        for idx, s in enumerate(scene.shapes):
            center = trajectories[idx][t]
            alpha = _coverage(s, center, h, w)
            patch = patches[idx]
            # Sample the patch in shape-local coordinates (bilinear, edges clamped).
            ly = ys - center[1] + (patch.shape[0] - 1) / 2.0
            lx = xs - center[0] + (patch.shape[1] - 1) / 2.0
            tex = map_coordinates(patch, np.stack([ly, lx]), order=1, mode="nearest")
            img = img * (1.0 - alpha) + tex * alpha
            masks[idx + 1] = Mask(_shape_mask(s, center, h, w))
        frames.append(GrayFrame(np.clip(img, 0.0, 255.0)))
        gt_masks.append(masks)

    # Analytic flow of the dominant (first) shape, on the destination frame's support.
    gt_flow: list[FlowField] = []
    for t in range(1, scene.frame_count):
        delta = trajectories[0][t] - trajectories[0][t - 1]
        support = gt_masks[t][1].data
        gt_flow.append(
            FlowField(u=np.where(support, delta[0], 0.0), v=np.where(support, delta[1], 0.0))
        )

    return GeneratedScene(frames, gt_masks, gt_flow, object_ids=[i + 1 for i in range(len(scene.shapes))])


def degrade(gt_masks: list[dict[int, Mask]], spec: DegradationSpec) -> list[dict[int, ScalarField]]:
    """Turn clean masks into unstable probability planes.

    Masks become saturated logits (+/-LOGIT_AMPLITUDE), then per frame and
    object: additive Gaussian logit noise, a random rigid translation of
    the plane (bilinear, edge-clamped), flicker scaling of the logits, and
    finally sigmoid plus optional dropout zeroing of the probability plane.
    With an all-zero spec the output thresholds back to the masks exactly.
    """
    out: list[dict[int, ScalarField]] = []
    for t, per_obj in enumerate(gt_masks):
        planes: dict[int, ScalarField] = {}
        for oid, mask in per_obj.items():
            logits = np.where(mask.data, LOGIT_AMPLITUDE, -LOGIT_AMPLITUDE).astype(np.float64)
            if spec.logit_noise_std > 0:
                rng = _rng(spec.seed, _CHANNEL_NOISE, t, oid)
                logits = logits + spec.logit_noise_std * rng.standard_normal(logits.shape)
            if spec.jitter_std > 0:
                rng = _rng(spec.seed, _CHANNEL_JITTER, t, oid)
                dx, dy = rng.normal(0.0, spec.jitter_std, size=2)
                ys, xs = np.mgrid[0 : logits.shape[0], 0 : logits.shape[1]].astype(np.float64)
                logits = map_coordinates(logits, np.stack([ys - dy, xs - dx]), order=1, mode="nearest")
            if spec.flicker_prob > 0:
                rng = _rng(spec.seed, _CHANNEL_FLICKER, t, oid)
                if rng.random() < spec.flicker_prob:
                    logits = logits * spec.flicker_scale
            probs = expit(logits)
            if spec.dropout_prob > 0:
                rng = _rng(spec.seed, _CHANNEL_DROPOUT, t, oid)
                if rng.random() < spec.dropout_prob:
                    probs = np.zeros_like(probs)
            planes[oid] = ScalarField(probs)
        out.append(planes)
    return out


def translation_pair(
    width: int, height: int, shift: tuple[int, int], seed: int, texture: TextureSpec | None = None
) -> tuple[GrayFrame, GrayFrame, FlowField]:
    """Two frames where the whole texture translates by integer ``shift``.

    Returns (prev, next, ground-truth flow); next(x) == prev(x - shift)
    with no wrap-around (both are crops of one larger texture).
    """
    texture = texture or TextureSpec(seed=seed, contrast=60.0)
    dx, dy = int(shift[0]), int(shift[1])
    pad = max(abs(dx), abs(dy)) + 1
    rng = _rng(seed, _CHANNEL_BACKGROUND, pad)
    canvas = 128.0 + texture.contrast * _smooth_noise(
        (height + 2 * pad, width + 2 * pad), rng, texture.smoothness
    )
    canvas = np.clip(canvas, 0.0, 255.0)
    prev = canvas[pad : pad + height, pad : pad + width]
    nxt = canvas[pad - dy : pad - dy + height, pad - dx : pad - dx + width]
    flow = FlowField(u=np.full((height, width), float(dx)), v=np.full((height, width), float(dy)))
    return GrayFrame(prev), GrayFrame(nxt), flow


def scene_to_dict(scene: SceneSpec) -> dict:
    return asdict(scene)


def degradation_to_dict(spec: DegradationSpec) -> dict:
    return asdict(spec)


def _pair(value) -> tuple[float, float]:
    x, y = value
    return (float(x), float(y))


def shape_from_dict(payload: dict) -> ShapeSpec:
    size = payload["size"]
    return ShapeSpec(
        kind=str(payload["kind"]),
        size=float(size) if np.isscalar(size) else _pair(size),
        center=_pair(payload["center"]),
        velocity=_pair(payload.get("velocity", (0.0, 0.0))),
        motion=str(payload.get("motion", "linear")),
        amplitude=None if payload.get("amplitude") is None else _pair(payload["amplitude"]),
        period=None if payload.get("period") is None else float(payload["period"]),
        phase=float(payload.get("phase", 0.0)),
        trajectory=None
        if payload.get("trajectory") is None
        else tuple(_pair(p) for p in payload["trajectory"]),
    )


def scene_from_dict(payload: dict) -> SceneSpec:
    try:
        texture = payload.get("texture", {})
        return SceneSpec(
            width=int(payload["width"]),
            height=int(payload["height"]),
            frame_count=int(payload["frame_count"]),
            shapes=tuple(shape_from_dict(s) for s in payload["shapes"]),
            texture=TextureSpec(
                seed=int(texture.get("seed", 0)),
                contrast=float(texture.get("contrast", 45.0)),
                smoothness=float(texture.get("smoothness", 2.5)),
            ),
            seed=int(payload.get("seed", 0)),
            border_margin=float(payload.get("border_margin", 4.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scene spec: {exc}") from exc


def degradation_from_dict(payload: dict) -> DegradationSpec:
    try:
        return DegradationSpec(
            logit_noise_std=float(payload.get("logit_noise_std", 0.0)),
            jitter_std=float(payload.get("jitter_std", 0.0)),
            flicker_prob=float(payload.get("flicker_prob", 0.0)),
            flicker_scale=float(payload.get("flicker_scale", 0.25)),
            dropout_prob=float(payload.get("dropout_prob", 0.0)),
            seed=int(payload.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad degradation spec: {exc}") from exc


def preset(name: str, seed: int = 42, width: int = 64, height: int = 64,
           frame_count: int = 60) -> tuple[SceneSpec, DegradationSpec]:
    """Named scene + degradation presets used by the CLI and the test suite."""
    if name == "flicker-disk":
        # geometry scales with the canvas; at the default 64x64 this is a
        # radius-10 disk orbiting with amplitude (12, 9) over one period
        unit = min(width, height) / 64.0
        scene = SceneSpec(
            width=width,
            height=height,
            frame_count=frame_count,
            shapes=(
                ShapeSpec(
                    kind="disk",
                    size=10.0 * unit,
                    center=(width / 2.0, height / 2.0),
                    motion="sinusoidal",
                    amplitude=(12.0 * width / 64.0, 9.0 * height / 64.0),
                    period=float(frame_count),
                ),
            ),
            texture=TextureSpec(seed=seed, contrast=45.0),
            seed=seed,
        )
        degr = DegradationSpec(logit_noise_std=1.0, jitter_std=2.0, flicker_prob=0.2,
                               flicker_scale=0.25, dropout_prob=0.0, seed=seed)
        return scene, degr
    if name == "dropout-disk":
        scene, degr = preset("flicker-disk", seed=seed, width=width, height=height, frame_count=frame_count)
        return scene, DegradationSpec(
            logit_noise_std=degr.logit_noise_std,
            jitter_std=degr.jitter_std,
            flicker_prob=degr.flicker_prob,
            flicker_scale=degr.flicker_scale,
            dropout_prob=0.05,
            seed=seed,
        )
    if name == "linear-rect":
        scene = SceneSpec(
            width=width,
            height=height,
            frame_count=frame_count,
            shapes=(
                ShapeSpec(
                    kind="rectangle",
                    size=(16.0, 12.0),
                    center=(width * 0.3, height * 0.35),
                    velocity=(min(0.4, (width * 0.4) / frame_count), min(0.3, (height * 0.3) / frame_count)),
                    motion="linear",
                ),
            ),
            texture=TextureSpec(seed=seed, contrast=45.0),
            seed=seed,
        )
        return scene, DegradationSpec(logit_noise_std=0.5, jitter_std=1.0, seed=seed)
    raise ConfigError(f"unknown preset {name!r} (have flicker-disk, dropout-disk, linear-rect)")


PRESET_NAMES = ("flicker-disk", "dropout-disk", "linear-rect")
