"""Hand-rolled SVG line charts; no plotting dependency.

Charts are deliberately plain XML so tests (and curious users) can parse
them: each curve is a ``<polyline class="series" data-label="...">`` plus
``<circle class="marker">`` elements, and shaded comparison intervals are
``<rect class="preference-region">`` elements.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape, quoteattr

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 18, 46
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Scale:
    def __init__(self, lo: float, hi: float, out_lo: float, out_hi: float):
        if hi <= lo:  # degenerate domain, e.g. a single grid point
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi = lo, hi
        self.out_lo, self.out_hi = out_lo, out_hi

    def __call__(self, x: float) -> float:
        f = (x - self.lo) / (self.hi - self.lo)
        return self.out_lo + f * (self.out_hi - self.out_lo)


def line_chart_svg(
    series: list[tuple[str, list[float], list[float]]],
    *,
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    regions: list[tuple[float, float]] | None = None,
) -> str:
    """Render labelled (x, y) curves to an SVG string.

    ``series`` holds (label, xs, ys) triples; non-finite y values are
    dropped point-by-point. ``regions`` are x-intervals (data coordinates)
    shaded behind the curves. With ``logx`` the x axis and any regions are
    log10-transformed; x values must then be positive.
    """
    if not series:
        raise ValueError("no series to plot")

    def tx(x: float) -> float:
        if logx:
            if x <= 0:
                raise ValueError("log-scale x axis requires positive grid values")
            return math.log10(x)
        return x

    xs_all = [tx(x) for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys if math.isfinite(y)]
    if not xs_all:
        raise ValueError("series contain no points")
    if not ys_all:
        ys_all = [0.0]

    sx = _Scale(min(xs_all), max(xs_all), MARGIN_L, WIDTH - MARGIN_R)
    sy = _Scale(min(ys_all), max(ys_all), HEIGHT - MARGIN_B, MARGIN_T)  # y grows upward

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]

    for x0, x1 in regions or []:
        px0, px1 = sorted((sx(tx(x0)), sx(tx(x1))))
        parts.append(
            f'<rect class="preference-region" x="{_fmt(px0)}" y="{MARGIN_T}" '
            f'width="{_fmt(px1 - px0)}" height="{HEIGHT - MARGIN_T - MARGIN_B}" '
            f'fill="#ffd54f" fill-opacity="0.35"/>'
        )

    # axes and ticks
    x_axis_y = HEIGHT - MARGIN_B
    parts.append(
        f'<g class="axes" stroke="#333" fill="none">'
        f'<line x1="{MARGIN_L}" y1="{x_axis_y}" x2="{WIDTH - MARGIN_R}" y2="{x_axis_y}"/>'
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{x_axis_y}"/></g>'
    )
    for t in _nice_ticks(sx.lo, sx.hi):
        px = sx(t)
        label = f"1e{t:g}" if logx else f"{t:g}"
        parts.append(f'<line x1="{_fmt(px)}" y1="{x_axis_y}" x2="{_fmt(px)}" y2="{x_axis_y + 5}" stroke="#333"/>')
        parts.append(
            f'<text class="x-tick" x="{_fmt(px)}" y="{x_axis_y + 18}" text-anchor="middle">{escape(label)}</text>'
        )
    for t in _nice_ticks(sy.lo, sy.hi):
        py = sy(t)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py)}" x2="{MARGIN_L}" y2="{_fmt(py)}" stroke="#333"/>')
        parts.append(
            f'<text class="y-tick" x="{MARGIN_L - 8}" y="{_fmt(py + 4)}" text-anchor="end">{t:g}</text>'
        )
    if xlabel:
        parts.append(
            f'<text class="x-label" x="{(MARGIN_L + WIDTH - MARGIN_R) / 2}" y="{HEIGHT - 8}" '
            f'text-anchor="middle">{escape(xlabel)}</text>'
        )
    if ylabel:
        cy = (MARGIN_T + HEIGHT - MARGIN_B) / 2
        parts.append(
            f'<text class="y-label" x="16" y="{cy}" text-anchor="middle" '
            f'transform="rotate(-90 16 {cy})">{escape(ylabel)}</text>'
        )

    # curves and legend
    for idx, (label, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = [
            (sx(tx(x)), sy(y)) for x, y in zip(xs, ys) if math.isfinite(y)
        ]
        points_attr = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
        parts.append(
            f'<polyline class="series" data-label={quoteattr(label)} fill="none" '
            f'stroke="{color}" stroke-width="1.8" points="{points_attr}"/>'
        )
        for px, py in pts:
            parts.append(
                f'<circle class="marker" data-label={quoteattr(label)} '
                f'cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="{color}"/>'
            )
        ly = MARGIN_T + 14 + 16 * idx
        lx = WIDTH - MARGIN_R - 170
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text class="legend" x="{lx + 28}" y="{ly}">{escape(label)}</text>')

    parts.append("</svg>")
    return "\n".join(parts)
