"""Dependency-free SVG rendering of landscape scans.

Fitness is drawn against the left axis in blue, tree node count against
the right axis in red, and the best valid sample is flagged with a black
asterisk.  Invalid samples break the polylines, leaving visible gaps.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .landscape import LandscapeError, Scan, best

_BLUE = "#1f77b4"
_RED = "#d62728"


def _tick_values(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(value: float) -> str:
    if value == 0:
        return "0"
    if abs(value) >= 1000 or abs(value) < 0.01:
        return f"{value:.2e}"
    return f"{value:.3g}"


def _segments(points: list[tuple[float, float] | None]) -> list[list[tuple[float, float]]]:
    runs: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] = []
    for p in points:
        if p is None:
            if current:
                runs.append(current)
                current = []
        else:
            current.append(p)
    if current:
        runs.append(current)
    return runs


def render_svg(
    scan_result: Scan,
    path: str | Path,
    *,
    title: str | None = None,
    width: int = 1000,
    height: int = 420,
    max_fitness: float | None = None,
) -> None:
    """Write the scan as a two-axis SVG line chart.

    ``max_fitness`` caps the left axis; without it the axis spans the
    largest finite fitness in the scan.  A scan with no finite fitness
    values renders the complexity series alone.
    """
    records = scan_result.records
    if not records:
        raise LandscapeError("cannot plot an empty scan")

    left, right, top, bottom = 70, 70, 40, 45
    plot_w = width - left - right
    plot_h = height - top - bottom

    xs = [rec.val.as_float() for rec in records]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi <= x_lo:
        x_hi = x_lo + 1e-9

    finite = [rec.fitness for rec in records if rec.valid and math.isfinite(rec.fitness)]
    fit_hi = max_fitness if max_fitness is not None else (max(finite) if finite else 1.0)
    if fit_hi <= 0:
        fit_hi = 1.0
    node_values = [rec.nodes for rec in records if rec.valid]
    node_hi = max(node_values) if node_values else 1

    def x_px(v: float) -> float:
        return left + (v - x_lo) / (x_hi - x_lo) * plot_w

    def fit_px(v: float) -> float:
        return top + plot_h - min(v, fit_hi) / fit_hi * plot_h

    def node_px(v: float) -> float:
        return top + plot_h - v / node_hi * plot_h

    lines: list[str] = []
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    lines.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        lines.append(
            f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
            f'font-size="15" font-family="sans-serif">{escape(title)}</text>'
        )

    # frame and ticks
    lines.append(
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#999" stroke-width="1"/>'
    )
    for tv in _tick_values(x_lo, x_hi):
        px = x_px(tv)
        lines.append(
            f'<line x1="{px:.1f}" y1="{top + plot_h}" x2="{px:.1f}" '
            f'y2="{top + plot_h + 4}" stroke="#333"/>'
        )
        lines.append(
            f'<text x="{px:.1f}" y="{top + plot_h + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{_fmt(tv)}</text>'
        )
    for tv in _tick_values(0.0, fit_hi):
        py = fit_px(tv)
        lines.append(
            f'<text x="{left - 8}" y="{py + 4:.1f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif" fill="{_BLUE}">{_fmt(tv)}</text>'
        )
    for tv in _tick_values(0.0, float(node_hi)):
        py = node_px(tv)
        lines.append(
            f'<text x="{left + plot_w + 8}" y="{py + 4:.1f}" text-anchor="start" '
            f'font-size="11" font-family="sans-serif" fill="{_RED}">{_fmt(tv)}</text>'
        )

    # axis labels
    lines.append(
        f'<text x="{left - 52}" y="{top + plot_h / 2:.1f}" font-size="12" fill="{_BLUE}" '
        f'font-family="sans-serif" transform="rotate(-90 {left - 52} {top + plot_h / 2:.1f})" '
        f'text-anchor="middle">fitness</text>'
    )
    lines.append(
        f'<text x="{left + plot_w + 52}" y="{top + plot_h / 2:.1f}" font-size="12" '
        f'fill="{_RED}" font-family="sans-serif" '
        f'transform="rotate(90 {left + plot_w + 52} {top + plot_h / 2:.1f})" '
        f'text-anchor="middle">node count</text>'
    )
    lines.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">genotype value</text>'
    )

    fit_points = [
        (x_px(rec.val.as_float()), fit_px(rec.fitness))
        if rec.valid and math.isfinite(rec.fitness)
        else None
        for rec in records
    ]
    node_points = [
        (x_px(rec.val.as_float()), node_px(rec.nodes)) if rec.valid else None
        for rec in records
    ]
    for series, colour in ((fit_points, _BLUE), (node_points, _RED)):
        for seg in _segments(series):
            if len(seg) == 1:
                x, y = seg[0]
                lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.2" fill="{colour}"/>')
            else:
                pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in seg)
                lines.append(
                    f'<polyline points="{pts}" fill="none" stroke="{colour}" '
                    f'stroke-width="1"/>'
                )

    try:
        _, rec = best(scan_result)
    except LandscapeError:
        rec = None
    if rec is not None and math.isfinite(rec.fitness):
        bx = x_px(rec.val.as_float())
        by = fit_px(rec.fitness)
        lines.append(
            f'<text x="{bx:.2f}" y="{by + 6:.2f}" text-anchor="middle" font-size="20" '
            f'font-family="sans-serif" fill="black">*</text>'
        )

    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")
