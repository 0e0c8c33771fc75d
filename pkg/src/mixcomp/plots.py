"""Minimal static SVG line charts (deterministic output, no dependencies)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence, Tuple
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _nice_range(values):
    finite = [v for v in values if v is not None and math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_chart(
    path,
    x: Sequence[float],
    series: Sequence[Tuple[str, Sequence[float]]],
    title: str = "",
    xlabel: str = "t",
    shade: Optional[Tuple[float, float]] = None,
    markers: Sequence[Tuple[str, Sequence[float]]] = (),
    width: int = 720,
    height: int = 320,
) -> None:
    """Write one panel with every series on a shared y-axis.

    ``shade`` fills an x-interval (e.g. a transaction period); ``markers``
    draws ticks at the given x positions in the colour of the same-named series.
    """
    left, right, top, bottom = 60, 130, 30, 40
    pw, ph = width - left - right, height - top - bottom
    x = list(x)
    x_lo, x_hi = (min(x), max(x)) if x else (0, 1)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    y_lo, y_hi = _nice_range([v for _, ys in series for v in ys])

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + (1 - (v - y_lo) / (y_hi - y_lo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="18" font-size="13">{escape(title)}</text>')
    if shade is not None:
        a, b = sx(max(shade[0], x_lo)), sx(min(shade[1], x_hi))
        out.append(f'<rect x="{a:.2f}" y="{top}" width="{max(b - a, 0):.2f}" height="{ph}" fill="#eeeeee"/>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for i in range(5):
        yv = y_lo + (y_hi - y_lo) * i / 4
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.2f}" text-anchor="end">{yv:.3g}</text>')
        xv = x_lo + (x_hi - x_lo) * i / 4
        out.append(f'<text x="{sx(xv):.2f}" y="{top + ph + 15}" text-anchor="middle">{xv:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 6}" text-anchor="middle">{escape(xlabel)}</text>')

    colours = {}
    for i, (name, ys) in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        colours[name] = colour
        pts = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, ys) if b is not None and math.isfinite(b)]
        if pts:
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        ly = top + 14 * i + 10
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 28}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 32}" y="{ly + 4}">{escape(name)}</text>')
    for name, xs in markers:
        colour = colours.get(name, "black")
        for a in xs:
            if x_lo <= a <= x_hi:
                out.append(
                    f'<line x1="{sx(a):.2f}" y1="{top + ph}" x2="{sx(a):.2f}" y2="{top + ph - 8}" '
                    f'stroke="{colour}" stroke-width="2"/>'
                )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
