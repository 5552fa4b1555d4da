"""Static SVG line charts for per-frame metric series.

The SVG is assembled by hand so identical inputs produce byte-identical
files (no library version strings, ids, or timestamps).
"""

from __future__ import annotations

from pathlib import Path

from .errors import InvalidInputError

WIDTH = 720
HEIGHT = 400
MARGIN_L = 60
MARGIN_R = 20
MARGIN_T = 40
MARGIN_B = 45

SERIES_COLORS = ("#c44e52", "#4c72b0")  # baseline, enhanced


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def metric_chart_svg(title: str, frames, series: list[tuple[str, list[float]]]) -> str:
    """Overlaid line chart of one metric; returns the SVG document text."""
    frames = [int(f) for f in frames]
    if not frames or not series:
        raise InvalidInputError("chart needs frames and at least one series")
    for _, values in series:
        if len(values) != len(frames):
            raise InvalidInputError("series length must match frame count")

    all_vals = [v for _, values in series for v in values]
    lo, hi = min(all_vals), max(all_vals)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    f_lo, f_hi = frames[0], frames[-1] if frames[-1] > frames[0] else frames[0] + 1

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(f: float) -> float:
        return MARGIN_L + plot_w * (f - f_lo) / (f_hi - f_lo)

    def sy(v: float) -> float:
        return MARGIN_T + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15" fill="#222">{title}</text>',
    ]

    for tick in _ticks(lo, hi):
        y = sy(tick)
        parts.append(
            f'<line x1="{MARGIN_L}" y1="{y:.2f}" x2="{WIDTH - MARGIN_R}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="#444">{_fmt(tick)}</text>'
        )
    for tick in _ticks(f_lo, f_hi):
        x = sx(tick)
        parts.append(
            f'<text x="{x:.2f}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" fill="#444">{int(round(tick))}</text>'
        )
    parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888888" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" fill="#222">frame</text>'
    )

    for (label, values), color in zip(series, SERIES_COLORS):
        points = " ".join(f"{sx(f):.2f},{sy(v):.2f}" for f, v in zip(frames, values))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    legend_x = MARGIN_L + 10
    for i, ((label, _), color) in enumerate(zip(series, SERIES_COLORS)):
        y = MARGIN_T + 16 + 18 * i
        parts.append(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 24}" y2="{y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{legend_x + 30}" y="{y + 4}" font-family="sans-serif" '
            f'font-size="12" fill="#222">{label}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_metric_chart(path, title: str, frames, series: list[tuple[str, list[float]]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(metric_chart_svg(title, frames, series), encoding="utf-8")
