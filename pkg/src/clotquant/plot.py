"""Dependency-free SVG scatter of clot area against flow duration."""
from __future__ import annotations

import json
from typing import Sequence
from xml.sax.saxutils import escape

from .errors import TooFewSamples, ZeroVariance
from .stats import linear_fit

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 40, 60


def _span(values: Sequence[float], floor_zero: bool = False) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if floor_zero:
        lo = min(lo, 0.0)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    return float(lo), float(hi)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def scatter_svg(
    xs: Sequence[float],
    ys: Sequence[float],
    title: str = "Cumulative clot area vs flow duration",
    x_label: str = "flow duration (min)",
    y_label: str = "cumulative clot area (px)",
) -> str:
    """One ``<circle>`` per point plus a ``<line class="fit">`` when a trend exists.

    The fit is drawn only when both series vary; its slope and intercept are
    embedded as JSON in ``<metadata>``.
    """
    if not xs or len(xs) != len(ys):
        raise ValueError("need equal-length, nonempty series")
    x0, x1 = _span(xs)
    y0, y1 = _span(ys, floor_zero=True)
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    fit = None
    if min(ys) != max(ys):
        try:
            fit = linear_fit(xs, ys)
        except (TooFewSamples, ZeroVariance):
            fit = None
    meta = {"n": len(xs), "fit": None if fit is None else {"slope": fit[0], "intercept": fit[1]}}

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<metadata>{escape(json.dumps(meta))}</metadata>",
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<path class="axes" d="M{LEFT} {TOP} V{TOP + ph} H{LEFT + pw}" stroke="black" fill="none"/>',
        f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="14">{escape(x_label)}</text>',
        f'<text x="20" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {TOP + ph / 2:.1f})">{escape(y_label)}</text>',
        f'<text x="{LEFT}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{x0:g}</text>',
        f'<text x="{LEFT + pw}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{x1:g}</text>',
        f'<text x="{LEFT - 6}" y="{TOP + ph + 4}" text-anchor="end" font-size="11">{y0:g}</text>',
        f'<text x="{LEFT - 6}" y="{TOP + 4}" text-anchor="end" font-size="11">{y1:g}</text>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]
    if fit is not None:
        slope, icpt = fit
        xa, xb = min(xs), max(xs)
        out.append(
            f'<line class="fit" x1="{_fmt(px(xa))}" y1="{_fmt(py(slope * xa + icpt))}" '
            f'x2="{_fmt(px(xb))}" y2="{_fmt(py(slope * xb + icpt))}" stroke="firebrick" stroke-width="2"/>'
        )
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="4" fill="steelblue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
