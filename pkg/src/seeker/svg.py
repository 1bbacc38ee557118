"""Minimal deterministic SVG line plots.

Only polylines, axis lines, tick labels and point markers are emitted. All
numbers are written with a fixed format so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
MAX_POINTS = 4000


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _label(x: float) -> str:
    if x == 0:
        return "0"
    s = f"{x:.6g}"
    return s


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("non-finite axis range")
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = m * mag
        if step >= raw:
            break
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(k * step, 12) for k in range(start, stop + 1)]


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
        pad = max(abs(lo) * 0.1, 1.0)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _thin(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(int))
    return x[idx], y[idx]


@dataclass
class LinePlot:
    title: str
    xlabel: str
    ylabel: str
    equal_aspect: bool = False
    series: list[tuple[np.ndarray, np.ndarray, str]] = field(default_factory=list)
    markers: list[tuple[float, float, str]] = field(default_factory=list)

    def add_series(self, x, y, label: str = "") -> None:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1 or len(x) == 0:
            raise ValueError("series needs matching non-empty 1-D arrays")
        self.series.append((x, y, label))

    def add_marker(self, x: float, y: float, label: str = "") -> None:
        self.markers.append((float(x), float(y), label))

    def _ranges(self):
        xs = [s[0] for s in self.series] + [np.array([m[0] for m in self.markers])]
        ys = [s[1] for s in self.series] + [np.array([m[1] for m in self.markers])]
        xall = np.concatenate(xs)
        yall = np.concatenate(ys)
        if len(xall) == 0:
            raise ValueError("nothing to plot")
        x0, x1 = _padded(float(xall.min()), float(xall.max()))
        y0, y1 = _padded(float(yall.min()), float(yall.max()))
        if self.equal_aspect:
            pw = WIDTH - MARGIN_L - MARGIN_R
            ph = HEIGHT - MARGIN_T - MARGIN_B
            scale = max((x1 - x0) / pw, (y1 - y0) / ph)
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            x0, x1 = cx - 0.5 * scale * pw, cx + 0.5 * scale * pw
            y0, y1 = cy - 0.5 * scale * ph, cy + 0.5 * scale * ph
        return x0, x1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._ranges()
        pw = WIDTH - MARGIN_L - MARGIN_R
        ph = HEIGHT - MARGIN_T - MARGIN_B

        def sx(x):
            return MARGIN_L + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return MARGIN_T + (y1 - y) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-family="sans-serif" '
            f'font-size="15">{escape(self.title)}</text>',
        ]
        # frame and ticks
        bottom, left = MARGIN_T + ph, MARGIN_L
        out.append(f'<rect x="{left}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for t in nice_ticks(x0, x1):
            X = _fmt(sx(t))
            out.append(f'<line x1="{X}" y1="{bottom}" x2="{X}" y2="{bottom + 5}" stroke="black"/>')
            out.append(
                f'<text x="{X}" y="{bottom + 18}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="11">{_label(t)}</text>'
            )
        for t in nice_ticks(y0, y1):
            Y = _fmt(sy(t))
            out.append(f'<line x1="{left - 5}" y1="{Y}" x2="{left}" y2="{Y}" stroke="black"/>')
            out.append(
                f'<text x="{left - 8}" y="{Y}" text-anchor="end" dominant-baseline="middle" '
                f'font-family="sans-serif" font-size="11">{_label(t)}</text>'
            )
        out.append(
            f'<text x="{left + pw // 2}" y="{HEIGHT - 10}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text x="16" y="{MARGIN_T + ph // 2}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13" transform="rotate(-90 16 {MARGIN_T + ph // 2})">{escape(self.ylabel)}</text>'
        )
        for i, (x, y, label) in enumerate(self.series):
            x, y = _thin(x, y)
            pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y))
            color = COLORS[i % len(COLORS)]
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
            if label:
                out.append(
                    f'<text x="{left + pw - 6}" y="{MARGIN_T + 16 + 14 * i}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="11" fill="{color}">{escape(label)}</text>'
                )
        for x, y, label in self.markers:
            X, Y = _fmt(sx(x)), _fmt(sy(y))
            out.append(f'<circle cx="{X}" cy="{Y}" r="4" fill="none" stroke="black" stroke-width="1.5"/>')
            out.append(f'<line x1="{_fmt(sx(x) - 6)}" y1="{Y}" x2="{_fmt(sx(x) + 6)}" y2="{Y}" stroke="black"/>')
            out.append(f'<line x1="{X}" y1="{_fmt(sy(y) - 6)}" x2="{X}" y2="{_fmt(sy(y) + 6)}" stroke="black"/>')
            if label:
                out.append(
                    f'<text x="{_fmt(sx(x) + 8)}" y="{_fmt(sy(y) - 8)}" font-family="sans-serif" '
                    f'font-size="11">{escape(label)}</text>'
                )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        text = self.render()
        path.write_text(text, encoding="utf-8")
        return path
