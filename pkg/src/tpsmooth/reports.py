"""Metric report files: per-frame CSV and summary/compare JSON.

Floating-point numbers are serialized with 6 significant digits
throughout so reports are stable across platforms.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SchemaError, UndefinedTestError
from .metrics import (
    METRIC_DIRECTIONS,
    METRIC_NAMES,
    FrameMetrics,
    frame_mean_series,
    improved_percent,
    summarize,
)
from .stats import PairedSample, wilcoxon_signed_rank

CSV_HEADER = ("frame", "object", "tiou", "wiou", "boundary_f", "dropout", "flow_mag", "uss")


def sig6(x: float) -> float:
    """Round to 6 significant digits through the shortest decimal form."""
    return float(f"{float(x):.6g}")


def _fmt(x) -> str:
    return f"{float(x):.6g}"


def write_metrics_csv(path, records: list[FrameMetrics]) -> None:
    if not records:
        raise InvalidInputError("refusing to write an empty metrics CSV")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in sorted(records, key=lambda r: (r.frame_index, r.object_id)):
            if rec.uss is None:
                raise InvalidInputError("records must have USS filled before writing")
            writer.writerow(
                (
                    rec.frame_index,
                    rec.object_id,
                    _fmt(rec.tiou),
                    _fmt(rec.wiou),
                    _fmt(rec.boundary_f),
                    int(rec.dropout),
                    _fmt(rec.flow_mag),
                    _fmt(rec.uss),
                )
            )


def read_metrics_csv(path) -> list[FrameMetrics]:
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("metrics CSV is empty", path=str(path)) from None
        if tuple(header) != CSV_HEADER:
            missing = set(CSV_HEADER) - set(header)
            raise SchemaError(
                f"metrics CSV header mismatch (missing {sorted(missing)})" if missing
                else f"metrics CSV header mismatch: {header}",
                path=str(path),
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"line {lineno}: expected {len(CSV_HEADER)} fields", path=str(path))
            try:
                records.append(
                    FrameMetrics(
                        frame_index=int(row[0]),
                        object_id=int(row[1]),
                        tiou=float(row[2]),
                        wiou=float(row[3]),
                        boundary_f=float(row[4]),
                        dropout=int(row[5]),
                        flow_mag=float(row[6]),
                        uss=float(row[7]),
                    )
                )
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: {exc}", path=str(path)) from None
    if not records:
        raise SchemaError("metrics CSV has no data rows", path=str(path))
    return records


def summary_payload(records: list[FrameMetrics]) -> dict:
    stats = summarize(records)
    return {
        metric: {key: sig6(val) for key, val in entry.items()} for metric, entry in stats.items()
    }


def write_summary_json(path, records: list[FrameMetrics]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary_payload(records), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def compare_payload(baseline: list[FrameMetrics], enhanced: list[FrameMetrics]) -> dict:
    """Joint per-metric report: means, deltas, improved-%, Wilcoxon.

    Wilcoxon pairs the per-frame means of the two runs; a run compared
    against itself reports the test as undefined rather than failing.
    """
    report: dict[str, dict] = {}
    for metric in METRIC_NAMES:
        frames_b, base = frame_mean_series(baseline, metric)
        frames_e, enh = frame_mean_series(enhanced, metric)
        if frames_b.shape != frames_e.shape or (frames_b != frames_e).any():
            raise InvalidInputError(f"runs cover different frames for metric {metric}")
        delta = float(enh.mean() - base.mean())
        base_mean = float(base.mean())
        entry = {
            "baseline_mean": sig6(base_mean),
            "enhanced_mean": sig6(enh.mean()),
            "delta": sig6(delta),
            "pct_delta": sig6(100.0 * delta / base_mean) if base_mean != 0.0 else None,
            "baseline_median": sig6(np.median(base)),
            "enhanced_median": sig6(np.median(enh)),
            "delta_median": sig6(np.median(enh) - np.median(base)),
            "direction": METRIC_DIRECTIONS[metric],
        }
        pct = improved_percent(base, enh, METRIC_DIRECTIONS[metric])
        entry["improved_pct"] = None if pct is None else sig6(pct)
        try:
            res = wilcoxon_signed_rank(PairedSample(tuple(base), tuple(enh)))
            entry["wilcoxon"] = {
                "W": sig6(res.statistic),
                "p": sig6(res.p_value),
                "n": res.n_effective,
                "exact": res.exact,
            }
        except UndefinedTestError as exc:
            entry["wilcoxon"] = {"W": None, "p": None, "n": exc.n_effective, "undefined": True}
        report[metric] = entry
    return report


def write_compare_json(path, baseline: list[FrameMetrics], enhanced: list[FrameMetrics],
                       extra: dict | None = None) -> dict:
    payload = {"metrics": compare_payload(baseline, enhanced)}
    if extra:
        payload.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return payload
