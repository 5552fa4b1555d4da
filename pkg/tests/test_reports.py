import json

import numpy as np
import pytest

from tpsmooth.errors import InvalidInputError, SchemaError
from tpsmooth.metrics import FrameMetrics
from tpsmooth.plotting import metric_chart_svg, write_metric_chart
from tpsmooth.reports import (
    compare_payload,
    read_metrics_csv,
    sig6,
    write_metrics_csv,
    write_summary_json,
)


def record(frame, obj=1, **kw):
    base = dict(tiou=0.5, wiou=0.6, boundary_f=0.7, dropout=0, flow_mag=1.25, uss=0.5)
    base.update(kw)
    return FrameMetrics(frame_index=frame, object_id=obj, **base)


def test_csv_has_exact_header_and_one_line_per_record(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, [record(1)])
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "frame,object,tiou,wiou,boundary_f,dropout,flow_mag,uss"
    assert len(lines) == 2


def test_csv_round_trip(tmp_path, rng):
    path = tmp_path / "metrics.csv"
    records = [
        record(t, obj, tiou=sig6(rng.random()), wiou=sig6(rng.random()), uss=sig6(rng.random()))
        for t in range(1, 6)
        for obj in (1, 2)
    ]
    write_metrics_csv(path, records)
    back = read_metrics_csv(path)
    assert len(back) == len(records)
    by_key = {(r.frame_index, r.object_id): r for r in records}
    for r in back:
        src = by_key[(r.frame_index, r.object_id)]
        assert r.tiou == src.tiou and r.uss == src.uss


def test_empty_run_refuses_to_write(tmp_path):
    with pytest.raises(InvalidInputError):
        write_metrics_csv(tmp_path / "metrics.csv", [])


def test_csv_missing_column_is_schema_error(tmp_path):
    path = tmp_path / "metrics.csv"
    path.write_text("frame,object,tiou\n1,1,0.5\n")
    with pytest.raises(SchemaError):
        read_metrics_csv(path)


def test_csv_numbers_use_6_significant_digits(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, [record(1, tiou=0.123456789)])
    assert "0.123457" in path.read_text()


def test_summary_json_shape(tmp_path):
    path = tmp_path / "summary.json"
    write_summary_json(path, [record(t, tiou=0.5 + 0.01 * t) for t in range(1, 11)])
    payload = json.loads(path.read_text())
    assert set(payload) == {"tiou", "wiou", "boundary_f", "dropout", "flow_mag", "uss"}
    assert set(payload["tiou"]) == {"mean", "std", "median"}


def test_compare_payload_fields_and_directions():
    base = [record(t, tiou=0.5, dropout=1 if t == 3 else 0) for t in range(1, 11)]
    enh = [record(t, tiou=0.6, dropout=0) for t in range(1, 11)]
    payload = compare_payload(base, enh)
    tiou = payload["tiou"]
    assert tiou["baseline_mean"] == 0.5 and tiou["enhanced_mean"] == 0.6
    assert tiou["delta"] == pytest.approx(0.1)
    assert tiou["pct_delta"] == pytest.approx(20.0)
    assert tiou["improved_pct"] == 100.0
    assert payload["dropout"]["improved_pct"] == 10.0  # one frame went 1 -> 0
    assert payload["flow_mag"]["improved_pct"] is None
    assert payload["tiou"]["wilcoxon"]["p"] is not None
    assert payload["flow_mag"]["wilcoxon"]["undefined"] is True  # identical series


def test_compare_requires_matching_frames():
    base = [record(t) for t in range(1, 5)]
    enh = [record(t) for t in range(1, 6)]
    with pytest.raises(InvalidInputError):
        compare_payload(base, enh)


def test_improved_pct_stays_in_range(rng):
    base = [record(t, tiou=float(rng.random())) for t in range(1, 40)]
    enh = [record(t, tiou=float(rng.random())) for t in range(1, 40)]
    payload = compare_payload(base, enh)
    for metric, entry in payload.items():
        if entry["improved_pct"] is not None:
            assert 0.0 <= entry["improved_pct"] <= 100.0


def test_sig6_rounding():
    assert sig6(0.12345649) == 0.123456
    assert sig6(123456789.0) == 123457000.0
    assert sig6(1.0) == 1.0


def test_svg_is_deterministic(tmp_path):
    frames = list(range(1, 21))
    a = [0.5 + 0.01 * t for t in frames]
    b = [0.6 + 0.005 * t for t in frames]
    doc1 = metric_chart_svg("Temporal IoU", frames, [("baseline", a), ("enhanced", b)])
    doc2 = metric_chart_svg("Temporal IoU", frames, [("baseline", a), ("enhanced", b)])
    assert doc1 == doc2
    write_metric_chart(tmp_path / "a.svg", "Temporal IoU", frames, [("baseline", a), ("enhanced", b)])
    write_metric_chart(tmp_path / "b.svg", "Temporal IoU", frames, [("baseline", a), ("enhanced", b)])
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert doc1.startswith("<svg")


def test_svg_rejects_mismatched_series():
    with pytest.raises(InvalidInputError):
        metric_chart_svg("x", [1, 2, 3], [("a", [0.1, 0.2])])
