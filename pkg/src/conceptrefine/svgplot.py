"""Minimal hand-emitted SVG line charts (no plotting dependency).

Output is a pure function of the input series, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import math

__all__ = ["render_line_chart"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 72, 24, 44, 56
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def render_line_chart(series, path, title: str = "", xlabel: str = "",
                      ylabel: str = "", logy: bool = False) -> None:
    """Write a standalone SVG line chart.

    Parameters
    ----------
    series : list of (label, xs, ys) triples; all must be nonempty.
    logy : plot y on a log10 axis; nonpositive values are clamped to a
        tenth of the smallest positive value present.
    """
    if not series or any(len(xs) == 0 or len(xs) != len(ys)
                         for _, xs, ys in series):
        raise ValueError("empty series")

    all_x = [float(x) for _, xs, _ in series for x in xs]
    all_y = [float(y) for _, _, ys in series for y in ys]
    if logy:
        positive = [y for y in all_y if y > 0]
        if not positive:
            raise ValueError("log scale needs at least one positive value")
        floor = min(positive) / 10.0
        tf = lambda y: math.log10(max(y, floor))
    else:
        tf = lambda y: y
    ty = [tf(y) for y in all_y]

    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(ty), max(ty)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
               f'height="{_H}" viewBox="0 0 {_W} {_H}">')
    out.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    if title:
        out.append(f'<text x="{_W // 2}" y="24" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="16">{_esc(title)}</text>')

    # axes
    out.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" '
               f'y2="{_H - _MB}" stroke="black"/>')
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
               f'stroke="black"/>')
    for i in range(5):
        fx = x_lo + (x_hi - x_lo) * i / 4
        fy = y_lo + (y_hi - y_lo) * i / 4
        xp, yp = px(fx), py(fy)
        out.append(f'<line x1="{xp:.2f}" y1="{_H - _MB}" x2="{xp:.2f}" '
                   f'y2="{_H - _MB + 5}" stroke="black"/>')
        out.append(f'<text x="{xp:.2f}" y="{_H - _MB + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{_tick(fx)}</text>')
        label = _tick(10 ** fy) if logy else _tick(fy)
        out.append(f'<line x1="{_ML - 5}" y1="{yp:.2f}" x2="{_ML}" '
                   f'y2="{yp:.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{yp + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{label}</text>')
    if xlabel:
        out.append(f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 12}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="13">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="18" y="{(_MT + _H - _MB) // 2}" '
                   f'text-anchor="middle" font-family="sans-serif" font-size="13" '
                   f'transform="rotate(-90 18 {(_MT + _H - _MB) // 2})">'
                   f'{_esc(ylabel)}</text>')

    for s, (label, xs, ys) in enumerate(series):
        color = _PALETTE[s % len(_PALETTE)]
        pts = [(px(float(x)), py(tf(float(y)))) for x, y in zip(xs, ys)]
        if len(pts) > 1:
            path_d = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline points="{path_d}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        else:
            x, y = pts[0]
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" '
                       f'fill="{color}"/>')
        if len(series) > 1:
            ly = _MT + 16 * s
            out.append(f'<line x1="{_W - _MR - 130}" y1="{ly}" '
                       f'x2="{_W - _MR - 104}" y2="{ly}" stroke="{color}" '
                       f'stroke-width="2"/>')
            out.append(f'<text x="{_W - _MR - 98}" y="{ly + 4}" '
                       f'font-family="sans-serif" font-size="12">'
                       f'{_esc(str(label))}</text>')

    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(out) + "\n")


def _tick(v: float) -> str:
    return "%.4g" % v


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))
