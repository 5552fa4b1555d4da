"""Temporal-stability metric suite and object-then-time aggregation.

Pairwise metrics compare frame t with t-1, so per-frame records start at
frame index 1. Aggregation averages over objects within a frame first,
then summarizes over frames (mean, population std, median).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_erosion, distance_transform_edt, generate_binary_structure

from .errors import ConfigError, InvalidInputError
from .flow import FlowField, mean_flow_magnitude, warp_backward
from .grid import Mask, ScalarField, require_same_shape, threshold_mask

METRIC_NAMES = ("tiou", "wiou", "boundary_f", "dropout", "flow_mag", "uss")

# +1: higher is better, -1: lower is better, 0: context only (no direction).
METRIC_DIRECTIONS = {
    "tiou": 1,
    "wiou": 1,
    "boundary_f": 1,
    "dropout": -1,
    "flow_mag": 0,
    "uss": 1,
}

_CROSS = generate_binary_structure(2, 1)


@dataclass(frozen=True)
class UssWeights:
    """Fixed weights of the unified stability score."""

    alpha: float = 0.4
    beta: float = 0.3
    gamma: float = 0.3

    def __post_init__(self):
        for w in (self.alpha, self.beta, self.gamma):
            if not (0.0 <= w <= 1.0):
                raise ConfigError("USS weights must lie in [0, 1]")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ConfigError("USS weights must sum to 1")


@dataclass
class FrameMetrics:
    """Per-frame, per-object metric record."""

    frame_index: int
    object_id: int
    tiou: float
    wiou: float
    boundary_f: float
    dropout: int
    flow_mag: float
    uss: float | None = None


def mask_iou(a: Mask, b: Mask) -> float:
    """Plain intersection-over-union; two empty masks count as identical (1.0)."""
    require_same_shape(a, b)
    union = int(np.logical_or(a.data, b.data).sum())
    if union == 0:
        return 1.0
    inter = int(np.logical_and(a.data, b.data).sum())
    return inter / union


def temporal_iou(m_t: Mask, m_prev: Mask) -> float:
    """Consecutive-frame mask overlap without motion compensation."""
    return mask_iou(m_t, m_prev)


def warped_iou(m_t: Mask, m_prev: Mask, flow: FlowField) -> float:
    """Overlap after aligning the previous mask with the frame-pair flow."""
    require_same_shape(m_t, m_prev, flow)
    warped = warp_backward(ScalarField(m_prev.data.astype(np.float64)), flow)
    return mask_iou(m_t, threshold_mask(warped, 0.5))


def extract_boundary(mask: Mask) -> Mask:
    """Inner boundary: foreground pixels with a 4-neighbor background pixel.

    The grid border counts as background, so an all-ones mask has a
    one-pixel ring boundary.
    """
    eroded = binary_erosion(mask.data, structure=_CROSS, border_value=0)
    return Mask(mask.data & ~eroded)


def boundary_f(m_t: Mask, m_prev: Mask, tolerance: float = 2.0) -> float:
    """F-score between consecutive mask boundaries under a pixel tolerance.

    Precision is the fraction of current boundary pixels within
    ``tolerance`` (Euclidean) of the previous boundary; recall is the
    symmetric quantity.
    """
    require_same_shape(m_t, m_prev)
    if tolerance < 0:
        raise ConfigError("boundary tolerance must be >= 0")
    b_t = extract_boundary(m_t).data
    b_p = extract_boundary(m_prev).data
    n_t = int(b_t.sum())
    n_p = int(b_p.sum())
    if n_t == 0 and n_p == 0:
        return 1.0
    if n_t == 0 or n_p == 0:
        return 0.0
    dist_to_prev = distance_transform_edt(~b_p)
    dist_to_cur = distance_transform_edt(~b_t)
    precision = float((dist_to_prev[b_t] <= tolerance).mean(dtype=np.float64))
    recall = float((dist_to_cur[b_p] <= tolerance).mean(dtype=np.float64))
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def dropout_indicator(mask: Mask) -> int:
    """1 iff the mask has no foreground pixel."""
    return int(not mask.data.any())


def robust_normalize(series, center: float | None = None, scale: float | None = None) -> np.ndarray:
    """IQR-robust normalization clip(0.5 + 0.25 * (x - median) / IQR, 0, 1).

    Quantiles interpolate linearly between order statistics. A degenerate
    IQR (< 1e-12) maps the whole series to 0.5. ``center``/``scale`` allow
    normalizing against pooled statistics instead of the series' own.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError("robust_normalize needs a nonempty 1-D series")
    if center is None:
        center = float(np.median(x))
    if scale is None:
        q1, q3 = np.quantile(x, [0.25, 0.75])
        scale = float(q3 - q1)
    if scale < 1e-12:
        return np.full(x.shape, 0.5)
    return np.clip(0.5 + 0.25 * (x - center) / scale, 0.0, 1.0)


def pooled_robust_stats(*series) -> tuple[float, float]:
    """Median and IQR of the concatenation of several series."""
    pooled = np.concatenate([np.asarray(s, dtype=np.float64) for s in series])
    if pooled.size == 0:
        raise InvalidInputError("no data to pool")
    q1, q3 = np.quantile(pooled, [0.25, 0.75])
    return float(np.median(pooled)), float(q3 - q1)


def uss_series(wiou, boundary, dropout, weights: UssWeights | None = None,
               stats: dict[str, tuple[float, float]] | None = None) -> np.ndarray:
    """Weighted sum of robust-normalized wIoU, boundary F, and persistence.

    The third component is the series 1 - D_t, normalized like the others.
    ``stats`` optionally supplies pooled (center, scale) per component,
    keyed by "wiou" / "boundary_f" / "persistence".
    """
    weights = weights or UssWeights()
    w = np.asarray(wiou, dtype=np.float64)
    b = np.asarray(boundary, dtype=np.float64)
    d = np.asarray(dropout, dtype=np.float64)
    if not (w.shape == b.shape == d.shape) or w.ndim != 1:
        raise InvalidInputError("USS component series must be equal-length 1-D")
    persistence = 1.0 - d

    def norm(series, key):
        if stats is not None and key in stats:
            c, s = stats[key]
            return robust_normalize(series, center=c, scale=s)
        return robust_normalize(series)

    return (
        weights.alpha * norm(w, "wiou")
        + weights.beta * norm(b, "boundary_f")
        + weights.gamma * norm(persistence, "persistence")
    )


def evaluate_masks(
    masks_by_frame: list[dict[int, Mask]],
    flows: list[FlowField],
    boundary_tolerance: float = 2.0,
    weights: UssWeights | None = None,
) -> list[FrameMetrics]:
    """Full per-frame metric records for a mask sequence.

    ``flows[t-1]`` must be the forward flow from frame t-1 to t. The USS
    column is filled per object after the pairwise pass (it needs whole
    series for normalization).
    """
    n = len(masks_by_frame)
    if n < 2:
        raise InvalidInputError("need at least 2 frames for pairwise metrics")
    if len(flows) != n - 1:
        raise InvalidInputError(f"need {n - 1} flow fields for {n} frames, got {len(flows)}")
    object_ids = sorted(masks_by_frame[0])
    for t, per_obj in enumerate(masks_by_frame):
        if sorted(per_obj) != object_ids:
            raise InvalidInputError(f"object ids change at frame {t}")

    records: list[FrameMetrics] = []
    for t in range(1, n):
        fmag = mean_flow_magnitude(flows[t - 1])
        for oid in object_ids:
            cur = masks_by_frame[t][oid]
            prev = masks_by_frame[t - 1][oid]
            records.append(
                FrameMetrics(
                    frame_index=t,
                    object_id=oid,
                    tiou=temporal_iou(cur, prev),
                    wiou=warped_iou(cur, prev, flows[t - 1]),
                    boundary_f=boundary_f(cur, prev, boundary_tolerance),
                    dropout=dropout_indicator(cur),
                    flow_mag=fmag,
                )
            )
    fill_uss(records, weights)
    return records


def fill_uss(records: list[FrameMetrics], weights: UssWeights | None = None,
             stats_by_object: dict[int, dict[str, tuple[float, float]]] | None = None) -> None:
    """Populate the ``uss`` field of records in place, per object series."""
    by_object: dict[int, list[FrameMetrics]] = {}
    for rec in records:
        by_object.setdefault(rec.object_id, []).append(rec)
    for oid, recs in by_object.items():
        recs.sort(key=lambda r: r.frame_index)
        stats = None if stats_by_object is None else stats_by_object.get(oid)
        scores = uss_series(
            [r.wiou for r in recs],
            [r.boundary_f for r in recs],
            [r.dropout for r in recs],
            weights,
            stats,
        )
        for rec, score in zip(recs, scores):
            rec.uss = float(score)


def frame_mean_series(records: list[FrameMetrics], metric: str) -> tuple[np.ndarray, np.ndarray]:
    """(frame indices, per-frame means over objects) for one metric."""
    if not records:
        raise InvalidInputError("no metric records")
    if metric not in METRIC_NAMES:
        raise InvalidInputError(f"unknown metric {metric!r}")
    sums: dict[int, list[float]] = {}
    for rec in records:
        value = getattr(rec, metric)
        if value is None:
            raise InvalidInputError(f"metric {metric} not filled on frame {rec.frame_index}")
        sums.setdefault(rec.frame_index, []).append(float(value))
    frames = np.array(sorted(sums), dtype=np.int64)
    means = np.array([np.mean(sums[f]) for f in frames], dtype=np.float64)
    return frames, means


def summarize(records: list[FrameMetrics]) -> dict[str, dict[str, float]]:
    """Per-metric {mean, std, median} over the per-frame means (std is population)."""
    if not records:
        raise InvalidInputError("no metric records")
    out: dict[str, dict[str, float]] = {}
    for metric in METRIC_NAMES:
        _, means = frame_mean_series(records, metric)
        out[metric] = {
            "mean": float(means.mean(dtype=np.float64)),
            "std": float(means.std(dtype=np.float64)),  # population (ddof=0)
            "median": float(np.median(means)),
        }
    return out


def improved_percent(baseline: np.ndarray, enhanced: np.ndarray, direction: int) -> float | None:
    """Share of frames (in %) where ``enhanced`` strictly beats ``baseline``."""
    if direction == 0:
        return None
    if baseline.shape != enhanced.shape or baseline.size == 0:
        raise InvalidInputError("paired series must be nonempty and equal-length")
    if direction > 0:
        better = enhanced > baseline
    else:
        better = enhanced < baseline
    return float(100.0 * better.mean(dtype=np.float64))
