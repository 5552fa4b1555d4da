"""Bit-exact on-disk formats: TPSM probability containers, PGM frames and
masks, Middlebury .flo flow files, and the sequence manifest.

All multi-byte values are little-endian. Readers parse from a fully
loaded byte buffer and raise a named :class:`~tpsmooth.errors.FormatError`
subclass with the byte offset for every corruption class; they never
crash on malformed input.

Layouts
-------
TPSM (``probs_NNNNNN.tpsm``, one file per frame)::

    magic   4 bytes  ASCII "TPSM"
    version u32      = 1
    width   u32
    height  u32
    objects u32
    planes  objects * width * height * f32, row-major, values in [0, 1]

PGM: binary "P5" with maxval 255; masks store {0, 255}.

FLO: f32 sanity tag 202021.25, i32 width, i32 height, then row-major
interleaved (u, v) f32 pairs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    ConfigError,
    HeaderError,
    InvalidInputError,
    SchemaError,
    TruncatedFileError,
    UnsupportedFormatError,
    ValueRangeError,
    VersionMismatchError,
)
from .grid import FlowField, GrayFrame, Mask, ScalarField

TPSM_MAGIC = b"TPSM"
TPSM_VERSION = 1
FLO_TAG = 202021.25
PGM_MAXVAL = 255

MANIFEST_NAME = "manifest.json"
FRAMES_DIR = "frames"
PROBS_DIR = "probs"
MASKS_DIR = "masks"
GT_MASKS_DIR = "gt_masks"
FLOW_DIR = "flow"


@dataclass(frozen=True)
class SequenceManifest:
    width: int
    height: int
    frame_count: int
    object_ids: tuple[int, ...]
    fps: float = 30.0
    source: str = ""
    format_version: int = 1

    def __post_init__(self):
        if self.format_version != 1:
            raise ConfigError(f"unsupported manifest version {self.format_version}")
        if self.width < 1 or self.height < 1:
            raise ConfigError("manifest needs width and height >= 1")
        if self.frame_count < 1:
            raise ConfigError("manifest needs frame_count >= 1")
        ids = tuple(int(i) for i in self.object_ids)
        if not ids or len(set(ids)) != len(ids) or any(i < 0 for i in ids):
            raise ConfigError("object_ids must be nonempty, unique, non-negative")
        object.__setattr__(self, "object_ids", ids)


# ---------------------------------------------------------------------------
# TPSM probability container


def write_tpsm(path, planes) -> None:
    """Write probability planes (list of H x W arrays in [0, 1]) to one file."""
    arrays = [np.asarray(p.data if isinstance(p, ScalarField) else p, dtype=np.float64) for p in planes]
    if not arrays:
        raise InvalidInputError("TPSM file needs at least one plane")
    h, w = arrays[0].shape
    for a in arrays:
        if a.shape != (h, w):
            raise InvalidInputError("TPSM planes must share one shape")
        if not np.isfinite(a).all() or a.min() < 0.0 or a.max() > 1.0:
            raise InvalidInputError("TPSM planes must be probability planes in [0, 1]")
    header = TPSM_MAGIC + struct.pack("<IIII", TPSM_VERSION, w, h, len(arrays))
    payload = b"".join(a.astype("<f4").tobytes(order="C") for a in arrays)
    Path(path).write_bytes(header + payload)


def read_tpsm(path) -> list[np.ndarray]:
    """Read a TPSM container back into float64 planes (bit-value preserving)."""
    buf = Path(path).read_bytes()
    name = str(path)
    if len(buf) < 4:
        raise TruncatedFileError("file too short for magic", offset=len(buf), path=name)
    if buf[:4] != TPSM_MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}", offset=0, path=name)
    if len(buf) < 20:
        raise TruncatedFileError("file too short for header", offset=len(buf), path=name)
    version, w, h, count = struct.unpack_from("<IIII", buf, 4)
    if version != TPSM_VERSION:
        raise VersionMismatchError(f"unsupported version {version}", offset=4, path=name)
    if w < 1:
        raise HeaderError(f"width {w} out of range", offset=8, path=name)
    if h < 1:
        raise HeaderError(f"height {h} out of range", offset=12, path=name)
    if count < 1:
        raise HeaderError(f"object count {count} out of range", offset=16, path=name)
    expected = 20 + 4 * w * h * count
    if len(buf) < expected:
        raise TruncatedFileError(
            f"payload needs {expected} bytes, file has {len(buf)}", offset=len(buf), path=name
        )
    raw = np.frombuffer(buf, dtype="<f4", count=w * h * count, offset=20)
    planes: list[np.ndarray] = []
    for i in range(count):
        plane = raw[i * w * h : (i + 1) * w * h]
        bad = ~np.isfinite(plane) | (plane < 0.0) | (plane > 1.0)
        if bad.any():
            idx = int(np.argmax(bad))
            raise ValueRangeError(
                f"plane {i} value {plane[idx]} outside [0, 1]",
                offset=20 + 4 * (i * w * h + idx),
                path=name,
            )
        planes.append(plane.reshape(h, w).astype(np.float64))
    return planes


# ---------------------------------------------------------------------------
# PGM frames and masks

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _pgm_skip_space(buf: bytes, pos: int, path: str) -> int:
    while True:
        if pos >= len(buf):
            raise TruncatedFileError("header ended early", offset=pos, path=path)
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in b"\r\n":
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            return pos


def _pgm_token(buf: bytes, pos: int, path: str) -> tuple[int, int]:
    pos = _pgm_skip_space(buf, pos, path)
    start = pos
    while pos < len(buf) and buf[pos : pos + 1] not in _WHITESPACE and buf[pos : pos + 1] != b"#":
        pos += 1
    token = buf[start:pos]
    if not token.isdigit():
        raise HeaderError(f"expected integer token, got {token!r}", offset=start, path=path)
    return int(token), pos


def write_pgm(path, grid: np.ndarray) -> None:
    """Write a uint8 grid as binary PGM (maxval 255)."""
    arr = np.asarray(grid)
    if arr.ndim != 2:
        raise InvalidInputError("PGM payload must be 2-D")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise InvalidInputError("PGM values must lie in [0, 255]")
        arr = np.rint(arr).astype(np.uint8)
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + arr.tobytes(order="C"))


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM with maxval 255 into a uint8 grid."""
    buf = Path(path).read_bytes()
    name = str(path)
    if len(buf) < 2:
        raise TruncatedFileError("file too short for magic", offset=len(buf), path=name)
    if buf[:2] != b"P5":
        raise BadMagicError(f"bad magic {buf[:2]!r} (binary PGM is P5)", offset=0, path=name)
    w, pos = _pgm_token(buf, 2, name)
    h, pos = _pgm_token(buf, pos, name)
    maxval, pos = _pgm_token(buf, pos, name)
    if w < 1 or h < 1:
        raise HeaderError(f"dimensions {w}x{h} out of range", offset=2, path=name)
    if maxval != PGM_MAXVAL:
        raise UnsupportedFormatError(f"maxval {maxval} unsupported (need 255)", offset=pos, path=name)
    if pos >= len(buf) or buf[pos : pos + 1] not in _WHITESPACE:
        raise HeaderError("maxval must be followed by one whitespace byte", offset=pos, path=name)
    pos += 1  # exactly one whitespace byte before the raster
    if len(buf) - pos < w * h:
        raise TruncatedFileError(
            f"raster needs {w * h} bytes, file has {len(buf) - pos}", offset=len(buf), path=name
        )
    return np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w).copy()


def write_frame(path, frame: GrayFrame) -> None:
    write_pgm(path, np.clip(np.rint(frame.intensity), 0, 255).astype(np.uint8))


def read_frame(path) -> GrayFrame:
    return GrayFrame(read_pgm(path).astype(np.float64))


def write_mask(path, mask: Mask) -> None:
    write_pgm(path, mask.data.astype(np.uint8) * 255)


def read_mask(path) -> Mask:
    arr = read_pgm(path)
    bad = (arr != 0) & (arr != 255)
    if bad.any():
        raise ValueRangeError(
            f"mask PGM holds values other than 0/255 (first: {int(arr[bad][0])})", path=str(path)
        )
    return Mask(arr == 255)


# ---------------------------------------------------------------------------
# Middlebury .flo flow files


def write_flo(path, flow: FlowField) -> None:
    h, w = flow.shape
    uv = np.empty((h, w, 2), dtype="<f4")
    uv[..., 0] = flow.u
    uv[..., 1] = flow.v
    header = struct.pack("<fii", FLO_TAG, w, h)
    Path(path).write_bytes(header + uv.tobytes(order="C"))


def read_flo(path) -> FlowField:
    buf = Path(path).read_bytes()
    name = str(path)
    if len(buf) < 4:
        raise TruncatedFileError("file too short for sanity tag", offset=len(buf), path=name)
    (tag,) = struct.unpack_from("<f", buf, 0)
    if tag != np.float32(FLO_TAG):
        raise BadMagicError(f"sanity tag {tag} != {FLO_TAG}", offset=0, path=name)
    if len(buf) < 12:
        raise TruncatedFileError("file too short for header", offset=len(buf), path=name)
    w, h = struct.unpack_from("<ii", buf, 4)
    if w < 1 or h < 1:
        raise HeaderError(f"dimensions {w}x{h} out of range", offset=4, path=name)
    expected = 12 + 8 * w * h
    if len(buf) < expected:
        raise TruncatedFileError(
            f"payload needs {expected} bytes, file has {len(buf)}", offset=len(buf), path=name
        )
    uv = np.frombuffer(buf, dtype="<f4", count=2 * w * h, offset=12).reshape(h, w, 2)
    if not np.isfinite(uv).all():
        bad = int(np.argmax(~np.isfinite(uv.reshape(-1))))
        raise ValueRangeError("non-finite flow value", offset=12 + 4 * bad, path=name)
    return FlowField(u=uv[..., 0].astype(np.float64), v=uv[..., 1].astype(np.float64))


# ---------------------------------------------------------------------------
# Manifest and sequence directory layout


def write_manifest(directory, manifest: SequenceManifest) -> None:
    payload = asdict(manifest)
    payload["object_ids"] = list(manifest.object_ids)
    path = Path(directory) / MANIFEST_NAME
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(directory) -> SequenceManifest:
    path = Path(directory) / MANIFEST_NAME
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc}", path=str(path)) from exc
    required = {"format_version", "width", "height", "frame_count", "object_ids", "fps", "source"}
    missing = required - payload.keys()
    if missing:
        raise SchemaError(f"manifest missing fields {sorted(missing)}", path=str(path))
    return SequenceManifest(
        width=int(payload["width"]),
        height=int(payload["height"]),
        frame_count=int(payload["frame_count"]),
        object_ids=tuple(int(i) for i in payload["object_ids"]),
        fps=float(payload["fps"]),
        source=str(payload["source"]),
        format_version=int(payload["format_version"]),
    )


def frame_path(directory, t: int) -> Path:
    return Path(directory) / FRAMES_DIR / f"frame_{t:06d}.pgm"


def probs_path(directory, t: int) -> Path:
    return Path(directory) / PROBS_DIR / f"probs_{t:06d}.tpsm"


def mask_path(directory, t: int, object_id: int, gt: bool = False) -> Path:
    sub = GT_MASKS_DIR if gt else MASKS_DIR
    return Path(directory) / sub / f"mask_{t:06d}_obj{object_id:02d}.pgm"


def flow_path(directory, t: int, backward: bool = False) -> Path:
    tag = "bwd" if backward else "fwd"
    return Path(directory) / FLOW_DIR / f"flow_{tag}_{t:06d}.flo"


def read_prob_planes(directory, t: int, manifest: SequenceManifest) -> dict[int, ScalarField]:
    planes = read_tpsm(probs_path(directory, t))
    if len(planes) != len(manifest.object_ids):
        raise InvalidInputError(
            f"frame {t}: {len(planes)} planes for {len(manifest.object_ids)} manifest objects"
        )
    for plane in planes:
        if plane.shape != (manifest.height, manifest.width):
            raise InvalidInputError(f"frame {t}: plane shape {plane.shape} disagrees with manifest")
    return {oid: ScalarField(p) for oid, p in zip(manifest.object_ids, planes)}


def write_prob_planes(directory, t: int, planes: dict[int, ScalarField], manifest: SequenceManifest) -> None:
    path = probs_path(directory, t)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_tpsm(path, [planes[oid] for oid in manifest.object_ids])
