"""
Hand-rolled SVG histograms (no plotting stack).  Output is deterministic:
fixed float formatting, no timestamps.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 62, 18, 34, 46
_COLORS = ("#c23b22", "#1f77b4", "#2ca02c")


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out


def histogram_svg(samples: Sequence[float], path, bins: int = 30, title: str = "",
                  overlays: Sequence[tuple[str, Callable[[np.ndarray], np.ndarray]]] = (),
                  x_label: str = "") -> None:
    """Write a density-scaled histogram with optional density-curve overlays.

    Each overlay is (legend label, density callable on an x-array).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    lo, hi = float(x[0]), float(x[-1])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    lo -= 0.02 * span
    hi += 0.02 * span
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    density = counts / (x.size * np.diff(edges))
    y_max = float(density.max(initial=0.0))
    grid_x = np.linspace(lo, hi, 256)
    curves = [(label, np.asarray(fn(grid_x), dtype=float)) for label, fn in overlays]
    for _, cy in curves:
        y_max = max(y_max, float(np.nanmax(cy, initial=0.0)))
    y_max = y_max * 1.08 if y_max > 0 else 1.0
    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def sx(v: float) -> float:
        return _ML + (v - lo) / (hi - lo) * pw

    def sy(v: float) -> float:
        return _MT + ph - v / y_max * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="14">{title}</text>')
    for c, e0, e1 in zip(density, edges[:-1], edges[1:]):
        if c <= 0:
            continue
        parts.append(
            f'<rect x="{_fmt(sx(e0))}" y="{_fmt(sy(c))}" '
            f'width="{_fmt(sx(e1) - sx(e0))}" height="{_fmt(_MT + ph - sy(c))}" '
            f'fill="#b0c4de" stroke="#5b7fa6" stroke-width="0.5"/>')
    for k, (label, cy) in enumerate(curves):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{_fmt(sx(gx))},{_fmt(sy(min(gy, y_max)))}"
                       for gx, gy in zip(grid_x, cy) if np.isfinite(gy))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        parts.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 16 * k}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11" fill="{color}">{label}</text>')
    # axes
    parts.append(f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" '
                 f'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" '
                 f'stroke="black" stroke-width="1"/>')
    for t in _ticks(lo, hi):
        parts.append(f'<line x1="{_fmt(sx(t))}" y1="{_MT + ph}" x2="{_fmt(sx(t))}" '
                     f'y2="{_MT + ph + 5}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(sx(t))}" y="{_MT + ph + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in _ticks(0.0, y_max, 4):
        parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(sy(t))}" x2="{_ML}" '
                     f'y2="{_fmt(sy(t))}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_ML - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    if x_label:
        parts.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 10}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{x_label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


__all__ = ["histogram_svg"]
