"""Minimal hand-written SVG line plot with error bars."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def error_bar_plot(xs, ys, errs, title: str, xlabel: str, ylabel: str, logx: bool = True, width: int = 640, height: int = 420) -> str:
    """Mean with +-err bars against x, as an SVG document string."""
    left, right, top, bottom = 70, 20, 40, 55
    pw, ph = width - left - right, height - top - bottom
    fx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    x0, x1 = fx(min(xs)), fx(max(xs))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (x1 - x0)
    x0, x1 = x0 - pad, x1 + pad
    lo = min(y - e for y, e in zip(ys, errs))
    hi = max(y + e for y, e in zip(ys, errs))
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    pad = 0.08 * (hi - lo)
    y0, y1 = min(0.0, lo - pad), hi + pad

    def px(v):
        return left + (fx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 7}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    for v in xs:
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{v:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16 {top + ph / 2:.1f}) rotate(-90)" text-anchor="middle">{escape(ylabel)}</text>')
    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>')
    for x, y, e in zip(xs, ys, errs):
        cx, a, b = px(x), py(y - e), py(y + e)
        out.append(f'<line x1="{cx:.2f}" y1="{a:.2f}" x2="{cx:.2f}" y2="{b:.2f}" stroke="#1f5fa8"/>')
        for yy in (a, b):
            out.append(f'<line x1="{cx - 4:.2f}" y1="{yy:.2f}" x2="{cx + 4:.2f}" y2="{yy:.2f}" stroke="#1f5fa8"/>')
        out.append(f'<circle cx="{cx:.2f}" cy="{py(y):.2f}" r="3" fill="#1f5fa8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
