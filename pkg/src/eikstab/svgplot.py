"""Minimal self-contained SVG 1.1 log-log plots.

No plotting dependency: a fixed-size canvas, decade grid lines, one
polyline with markers per series, and a text legend.  Output bytes are
deterministic for identical input.
"""

from __future__ import annotations

import math
import os
from typing import List, Sequence, Tuple

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _decades(lo: float, hi: float) -> List[int]:
    return list(range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1))


class _Axis:
    def __init__(self, lo: float, hi: float, p0: float, p1: float):
        if lo <= 0 or hi <= 0:
            raise ValueError("log axis needs positive data")
        if lo == hi:
            lo, hi = lo / 2.0, hi * 2.0
        pad = (math.log10(hi) - math.log10(lo)) * 0.06 + 1e-12
        self.l0 = math.log10(lo) - pad
        self.l1 = math.log10(hi) + pad
        self.p0, self.p1 = p0, p1

    def __call__(self, x: float) -> float:
        t = (math.log10(x) - self.l0) / (self.l1 - self.l0)
        return self.p0 + t * (self.p1 - self.p0)

    def ticks(self) -> List[float]:
        return [10.0 ** d for d in
                _decades(10.0 ** self.l0, 10.0 ** self.l1)
                if self.l0 <= d <= self.l1]


def log_log_svg(series: Sequence[dict], title: str = "",
                xlabel: str = "", ylabel: str = "") -> str:
    """series: dicts with keys label, xs, ys (positive numbers)."""
    if not series:
        raise ValueError("need at least one series")
    xs_all = [x for s in series for x in s["xs"]]
    ys_all = [y for s in series for y in s["ys"]]
    if not xs_all:
        raise ValueError("series are empty")
    ax = _Axis(min(xs_all), max(xs_all), MARGIN_L, WIDTH - MARGIN_R)
    ay = _Axis(min(ys_all), max(ys_all), HEIGHT - MARGIN_B, MARGIN_T)

    out: List[str] = []
    out.append('<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
               f'width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" '
               'fill="white"/>')
    # frame
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" '
               f'width="{WIDTH - MARGIN_L - MARGIN_R}" '
               f'height="{HEIGHT - MARGIN_T - MARGIN_B}" '
               'fill="none" stroke="black" stroke-width="1"/>')
    # decade grid and tick labels
    for tx in ax.ticks():
        px = ax(tx)
        out.append(f'<line x1="{_fmt(px)}" y1="{MARGIN_T}" x2="{_fmt(px)}" '
                   f'y2="{HEIGHT - MARGIN_B}" stroke="#cccccc" '
                   'stroke-width="0.5"/>')
        out.append(f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN_B + 18}" '
                   'font-family="sans-serif" font-size="12" '
                   f'text-anchor="middle">{_fmt(tx)}</text>')
    for ty in ay.ticks():
        py = ay(ty)
        out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(py)}" '
                   f'x2="{WIDTH - MARGIN_R}" y2="{_fmt(py)}" '
                   'stroke="#cccccc" stroke-width="0.5"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(py + 4)}" '
                   'font-family="sans-serif" font-size="12" '
                   f'text-anchor="end">{_fmt(ty)}</text>')
    # series
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(ax(x), ay(y)) for x, y in zip(s["xs"], s["ys"])]
        path = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
        out.append(f'<polyline points="{path}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        for px, py in pts:
            out.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" '
                       f'fill="{color}"/>')
        ly = MARGIN_T + 16 + 16 * i
        lx = WIDTH - MARGIN_R - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}" font-family="sans-serif" '
                   f'font-size="12">{s["label"]}</text>')
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="24" font-family="sans-serif" '
                   f'font-size="15" text-anchor="middle">{title}</text>')
    if xlabel:
        out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" '
                   'font-family="sans-serif" font-size="13" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{HEIGHT // 2}" '
                   'font-family="sans-serif" font-size="13" '
                   'text-anchor="middle" transform="rotate(-90 16 '
                   f'{HEIGHT // 2})">{ylabel}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_log_log(path: str, series: Sequence[dict], title: str = "",
                  xlabel: str = "", ylabel: str = "") -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(log_log_svg(series, title=title, xlabel=xlabel,
                             ylabel=ylabel))
