"""Minimal deterministic SVG line plots (polylines, shaded bands, ticks, legend)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=64, right=20, top=36, bottom=52)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str = "#1f77b4"
    dash: Optional[str] = None
    marker: bool = False


@dataclass
class Band:
    x: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    color: str = "#2ca02c"
    opacity: float = 0.2
    label: Optional[str] = None


@dataclass
class LinePlot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    series: List[Series] = field(default_factory=list)
    bands: List[Band] = field(default_factory=list)
    ylim: Optional[Sequence[float]] = None

    def add(self, x, y, label, **kw) -> "LinePlot":
        self.series.append(Series(np.asarray(x, float), np.asarray(y, float), label, **kw))
        return self

    def add_band(self, x, lo, hi, **kw) -> "LinePlot":
        self.bands.append(Band(np.asarray(x, float), np.asarray(lo, float), np.asarray(hi, float), **kw))
        return self

    def _limits(self):
        xs = [s.x for s in self.series] + [b.x for b in self.bands]
        ys = [s.y for s in self.series] + [b.lo for b in self.bands] + [b.hi for b in self.bands]
        x0 = min(float(np.min(a)) for a in xs)
        x1 = max(float(np.max(a)) for a in xs)
        if self.ylim is not None:
            y0, y1 = map(float, self.ylim)
        else:
            y0 = min(float(np.nanmin(a)) for a in ys)
            y1 = max(float(np.nanmax(a)) for a in ys)
            pad = 0.05 * (y1 - y0 or 1.0)
            y0, y1 = y0 - pad, y1 + pad
        return x0, x1 or x0 + 1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._limits()
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        sx = lambda v: MARGIN["left"] + (v - x0) / (x1 - x0) * pw
        sy = lambda v: MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph
        clip = lambda v: min(max(v, y0), y1)

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        if self.title:
            out.append(f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{_esc(self.title)}</text>')
        # axes
        bx, by = MARGIN["left"], MARGIN["top"] + ph
        out.append(f'<rect x="{bx}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for t in _nice_ticks(x0, x1):
            px = sx(t)
            out.append(f'<line x1="{_fmt(px)}" y1="{by}" x2="{_fmt(px)}" y2="{by + 5}" stroke="black"/>')
            out.append(f'<text x="{_fmt(px)}" y="{by + 18}" text-anchor="middle">{t:g}</text>')
        for t in _nice_ticks(y0, y1):
            py = sy(t)
            out.append(f'<line x1="{bx - 5}" y1="{_fmt(py)}" x2="{bx}" y2="{_fmt(py)}" stroke="black"/>')
            out.append(f'<text x="{bx - 8}" y="{_fmt(py + 4)}" text-anchor="end">{t:g}</text>')
        if self.xlabel:
            out.append(f'<text x="{bx + pw / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{_esc(self.xlabel)}</text>')
        if self.ylabel:
            cy = MARGIN["top"] + ph / 2
            out.append(f'<text x="16" y="{cy:.0f}" text-anchor="middle" transform="rotate(-90 16 {cy:.0f})">{_esc(self.ylabel)}</text>')

        for b in self.bands:
            upper = " ".join(f"{_fmt(sx(x))},{_fmt(sy(clip(y)))}" for x, y in zip(b.x, b.hi))
            lower = " ".join(f"{_fmt(sx(x))},{_fmt(sy(clip(y)))}" for x, y in zip(b.x[::-1], b.lo[::-1]))
            out.append(f'<polygon points="{upper} {lower}" fill="{b.color}" fill-opacity="{b.opacity}" stroke="none"/>')
        for s in self.series:
            pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(clip(y)))}" for x, y in zip(s.x, s.y) if np.isfinite(y))
            dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
            if s.marker:
                for x, y in zip(s.x, s.y):
                    out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(clip(y)))}" r="2" fill="{s.color}"/>')
            else:
                out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="1.5"{dash}/>')

        # legend
        entries = [(s.label, s.color, s.dash, "line") for s in self.series]
        entries += [(b.label, b.color, None, "box") for b in self.bands if b.label]
        lx, ly = bx + pw - 170, MARGIN["top"] + 10
        for i, (label, color, dash, kind) in enumerate(entries):
            y = ly + 16 * i
            if kind == "line":
                d = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" stroke-width="2"{d}/>')
            else:
                out.append(f'<rect x="{lx}" y="{y - 5}" width="24" height="10" fill="{color}" fill-opacity="0.3"/>')
            out.append(f'<text x="{lx + 30}" y="{y + 4}">{_esc(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.render())


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
