"""Minimal deterministic SVG line charts.

Only what the result bundles need: multi-series line plots with linear or
log-10 vertical axes, tick labels, and a legend.  Output is plain text with
fixed formatting so identical inputs produce identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

__all__ = ["line_chart", "write_line_chart"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 44


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_chart(
    series: list[tuple[str, list[float], list[float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_y: bool = False,
    width: int = 720,
    height: int = 480,
) -> str:
    """Render labeled (x, y) series as an SVG document string.

    In log mode, points with non-positive y are dropped (an error curve
    starts at exactly zero, for example).
    """
    if not series:
        raise ValueError("need at least one series")
    cleaned = []
    for label, xs, ys in series:
        if len(xs) != len(ys):
            raise ValueError(f"series {label!r} has mismatched x/y lengths")
        pts = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if log_y:
            pts = [(x, y) for x, y in pts if y > 0]
        cleaned.append((label, pts))
    all_pts = [p for _, pts in cleaned for p in pts]
    if not all_pts:
        raise ValueError("no plottable points")
    x_lo = min(p[0] for p in all_pts)
    x_hi = max(p[0] for p in all_pts)
    if log_y:
        y_lo = math.log10(min(p[1] for p in all_pts))
        y_hi = math.log10(max(p[1] for p in all_pts))
    else:
        y_lo = min(p[1] for p in all_pts)
        y_hi = max(p[1] for p in all_pts)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.04 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def sx(x: float) -> float:
        return _MARGIN_L + plot_w * (x - x_lo) / (x_hi - x_lo)

    def sy(y: float) -> float:
        yv = math.log10(y) if log_y else y
        return _MARGIN_T + plot_h * (1.0 - (yv - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>'
        )

    for tick in _nice_ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(
            f'<line x1="{px:.2f}" y1="{_MARGIN_T + plot_h}" x2="{px:.2f}" '
            f'y2="{_MARGIN_T + plot_h + 4}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{_MARGIN_T + plot_h + 17}" text-anchor="middle">{_fmt(tick)}</text>'
        )
    if log_y:
        decades = range(math.floor(y_lo), math.ceil(y_hi) + 1)
        y_ticks = [(d, f"1e{d:d}") for d in decades if y_lo <= d <= y_hi]
    else:
        y_ticks = [(t, _fmt(t)) for t in _nice_ticks(y_lo, y_hi)]
    for tick, label in y_ticks:
        py = _MARGIN_T + plot_h * (1.0 - (tick - y_lo) / (y_hi - y_lo))
        parts.append(
            f'<line x1="{_MARGIN_L - 4}" y1="{py:.2f}" x2="{_MARGIN_L}" y2="{py:.2f}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 7}" y="{py + 4:.2f}" text-anchor="end">{escape(label)}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle">'
            f"{escape(x_label)}</text>"
        )
    if y_label:
        cx, cy = 16, _MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="{cx}" y="{cy:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 {cx} {cy:.1f})">{escape(y_label)}</text>'
        )

    for i, (label, pts) in enumerate(cleaned):
        if not pts:
            continue
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN_T + 14 + 16 * i
        lx = _MARGIN_L + plot_w - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 27}" y="{ly}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_line_chart(path, series, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(line_chart(series, **kwargs))
