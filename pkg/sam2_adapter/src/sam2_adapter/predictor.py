"""SAM2 video-predictor backend behind a minimal tracking protocol.

A predictor is any object with ``track(frames, prompt)`` yielding one
(H, W) float logit plane per frame, in order. The SAM2 backend imports
torch/sam2 lazily so the exporter stays importable without the ML stack.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .errors import ModelLoadError
from .export import PromptSpec

DEFAULT_MODEL_CFG = "configs/sam2.1/sam2.1_hiera_l.yaml"


class Sam2VideoPredictor:
    """Frozen SAM2 checkpoint driven through its video API (top-1 mask)."""

    def __init__(self, checkpoint: str, model_cfg: str = DEFAULT_MODEL_CFG, device: str = "cuda"):
        try:
            import torch
            from sam2.build_sam import build_sam2_video_predictor
        except ImportError as exc:
            raise ModelLoadError(
                "SAM2 backend needs the torch and sam2 packages installed"
            ) from exc
        if not Path(checkpoint).exists():
            raise ModelLoadError(f"checkpoint {checkpoint} not found")
        torch.manual_seed(0)
        try:
            self._predictor = build_sam2_video_predictor(model_cfg, checkpoint, device=device)
        except Exception as exc:  # checkpoint/config mismatch surfaces here
            raise ModelLoadError(f"could not build SAM2 predictor: {exc}") from exc

    def track(self, frames: list[np.ndarray], prompt: PromptSpec):
        import cv2
        import torch

        with tempfile.TemporaryDirectory(prefix="sam2_frames_") as tmp:
            # SAM2's video loader consumes a directory of numbered JPEG frames.
            for t, rgb in enumerate(frames):
                cv2.imwrite(str(Path(tmp) / f"{t:05d}.jpg"), rgb[..., ::-1])
            with torch.inference_mode():
                state = self._predictor.init_state(video_path=tmp)
                points = np.array([[x, y] for x, y, _ in prompt.points], dtype=np.float32)
                labels = np.array([1 if positive else 0 for _, _, positive in prompt.points],
                                  dtype=np.int32)
                self._predictor.add_new_points_or_box(
                    inference_state=state,
                    frame_idx=prompt.frame_index,
                    obj_id=prompt.object_id,
                    points=points,
                    labels=labels,
                )
                planes: dict[int, np.ndarray] = {}
                for frame_idx, object_ids, mask_logits in self._predictor.propagate_in_video(state):
                    row = list(object_ids).index(prompt.object_id)
                    planes[frame_idx] = mask_logits[row].squeeze().float().cpu().numpy()
        for t in range(len(frames)):
            yield planes[t]
