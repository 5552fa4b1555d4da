"""Minimal writers for the exchange layout consumed by the smoothing toolchain.

Deliberately self-contained (no dependency on the consumer package) so the
byte layout is pinned on both sides of the boundary: TPSM is ASCII magic
"TPSM", four little-endian u32 fields (version = 1, width, height, object
count), then row-major float32 planes in [0, 1]; frames are binary PGM
(P5, maxval 255).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np


def write_tpsm(path, planes: list[np.ndarray]) -> None:
    h, w = planes[0].shape
    payload = [b"TPSM", struct.pack("<IIII", 1, w, h, len(planes))]
    for plane in planes:
        arr = np.asarray(plane, dtype=np.float64)
        if arr.shape != (h, w) or not np.isfinite(arr).all() or arr.min() < 0 or arr.max() > 1:
            raise ValueError("TPSM planes must be equal-shape probability planes")
        payload.append(arr.astype("<f4").tobytes(order="C"))
    Path(path).write_bytes(b"".join(payload))


def write_pgm(path, gray: np.ndarray) -> None:
    arr = np.asarray(gray, dtype=np.uint8)
    h, w = arr.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + arr.tobytes(order="C"))


def write_manifest(directory, width: int, height: int, frame_count: int,
                   object_ids: list[int], fps: float, source: str) -> None:
    payload = {
        "format_version": 1,
        "width": width,
        "height": height,
        "frame_count": frame_count,
        "object_ids": object_ids,
        "fps": fps,
        "source": source,
    }
    path = Path(directory) / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
