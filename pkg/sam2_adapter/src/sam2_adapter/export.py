"""Frame extraction and TPSM export around a video predictor."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PromptError, UnreadableVideoError
from .rasters import write_manifest, write_pgm, write_tpsm

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".tif", ".tiff")


@dataclass(frozen=True)
class PromptSpec:
    """Single-object weak prompt: points on the first frame only."""

    points: tuple[tuple[float, float, bool], ...]  # (x, y, positive)
    object_id: int = 1
    frame_index: int = 0

    def __post_init__(self):
        if self.frame_index != 0:
            raise PromptError("weak-prompt protocol prompts on the first frame only")
        positives = [p for p in self.points if p[2]]
        if len(positives) != 1:
            raise PromptError("weak-prompt protocol needs exactly one positive point")

    @property
    def positive_point(self) -> tuple[float, float]:
        x, y, _ = next(p for p in self.points if p[2])
        return (x, y)


def load_frames(source) -> list[np.ndarray]:
    """Decode a video file or a directory of image frames into RGB arrays."""
    import cv2

    path = Path(source)
    frames: list[np.ndarray] = []
    if path.is_dir():
        names = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not names:
            raise UnreadableVideoError(f"no image frames in {path}")
        for name in names:
            bgr = cv2.imread(str(name), cv2.IMREAD_COLOR)
            if bgr is None:
                raise UnreadableVideoError(f"could not decode {name}")
            frames.append(bgr[..., ::-1].copy())
        return frames
    if not path.exists():
        raise UnreadableVideoError(f"{path} does not exist")
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise UnreadableVideoError(f"could not open video {path}")
    try:
        while True:
            ok, bgr = cap.read()
            if not ok:
                break
            frames.append(bgr[..., ::-1].copy())
    finally:
        cap.release()
    if not frames:
        raise UnreadableVideoError(f"no decodable frames in {path}")
    return frames


def luminance_u8(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0].astype(np.float64), rgb[..., 1].astype(np.float64), rgb[..., 2].astype(np.float64)
    return np.clip(np.rint(0.299 * r + 0.587 * g + 0.114 * b), 0, 255).astype(np.uint8)


def sigmoid(logits: np.ndarray) -> np.ndarray:
    x = np.asarray(logits, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def export(video, prompt: PromptSpec, out_dir, predictor, fps: float = 30.0) -> Path:
    """Run the predictor over the clip and write the exchange layout.

    Writes manifest.json, frames/frame_NNNNNN.pgm (luminance), and
    probs/probs_NNNNNN.tpsm with sigmoid(logits) for the prompted object.
    """
    frames = load_frames(video)
    h, w = frames[0].shape[:2]
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "probs").mkdir(parents=True, exist_ok=True)

    count = 0
    for t, (frame, logits) in enumerate(zip(frames, predictor.track(frames, prompt))):
        logits = np.asarray(logits, dtype=np.float64)
        if logits.shape != (h, w):
            raise UnreadableVideoError(
                f"predictor returned {logits.shape} logits for {w}x{h} frame {t}"
            )
        write_pgm(out / "frames" / f"frame_{t:06d}.pgm", luminance_u8(frame))
        write_tpsm(out / "probs" / f"probs_{t:06d}.tpsm", [sigmoid(logits)])
        count += 1
    if count != len(frames):
        raise UnreadableVideoError(
            f"predictor produced {count} planes for {len(frames)} frames"
        )
    write_manifest(out, w, h, count, [prompt.object_id], fps, source=f"sam2-export:{video}")
    return out
