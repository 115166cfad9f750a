"""Self-contained SVG output: categorical heatmap, ternary trajectory, line chart."""

from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f"]
LINE_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"]


def _f(v: float) -> str:
    return f"{v:.3f}"


def _doc(width: int, height: int, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def heatmap(
    xs: np.ndarray,
    ys: np.ndarray,
    labels: np.ndarray,
    xlabel: str = "alpha",
    ylabel: str = "beta",
    lines: Optional[dict[str, Sequence[float]]] = None,
    title: str = "",
) -> str:
    """labels[iy, ix] categorical; optional boundary curves y(x) drawn over the cells."""
    W, H, L, B, T, R = 640, 480, 60, 50, 30, 170
    pw, ph = W - L - R, H - T - B
    cats = sorted({str(v) for v in labels.ravel()})
    color = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(cats)}
    x0, x1 = float(xs[0]), float(xs[-1])
    y0, y1 = float(ys[0]), float(ys[-1])
    dx = (x1 - x0) / max(len(xs) - 1, 1) or 1.0
    dy = (y1 - y0) / max(len(ys) - 1, 1) or 1.0
    xlo, xhi, ylo, yhi = x0 - dx / 2, x1 + dx / 2, y0 - dy / 2, y1 + dy / 2

    def px(v):
        return L + (v - xlo) / (xhi - xlo) * pw

    def py(v):
        return T + ph - (v - ylo) / (yhi - ylo) * ph

    body = []
    cw, chh = pw / len(xs), ph / len(ys)
    for iy, yv in enumerate(ys):
        for ix, xv in enumerate(xs):
            body.append(
                f'<rect x="{_f(px(xv - dx / 2))}" y="{_f(py(yv + dy / 2))}" width="{_f(cw + 0.3)}" '
                f'height="{_f(chh + 0.3)}" fill="{color[str(labels[iy, ix])]}"/>'
            )
    for i, (name, ys_line) in enumerate((lines or {}).items()):
        pts = " ".join(
            f"{_f(px(xv))},{_f(py(yv))}" for xv, yv in zip(xs, ys_line) if ylo <= yv <= yhi
        )
        if pts:
            col = LINE_COLORS[i % len(LINE_COLORS)]
            body.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="2"/>')
            body.append(f'<text x="{W - R + 10}" y="{T + 20 * (len(cats) + i + 1)}" fill="{col}">{escape(name)}</text>')
    for i, c in enumerate(cats):
        body.append(f'<rect x="{W - R + 10}" y="{T + 20 * i}" width="12" height="12" fill="{color[c]}"/>')
        body.append(f'<text x="{W - R + 28}" y="{T + 20 * i + 11}">{escape(c)}</text>')
    body += _axes(L, T, pw, ph, (xlo, xhi), (ylo, yhi), xlabel, ylabel, title)
    return _doc(W, H, body)


def _axes(L, T, pw, ph, xr, yr, xlabel, ylabel, title) -> list[str]:
    out = [f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for frac in np.linspace(0, 1, 5):
        xv = xr[0] + frac * (xr[1] - xr[0])
        yv = yr[0] + frac * (yr[1] - yr[0])
        out.append(f'<text x="{_f(L + frac * pw)}" y="{T + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{L - 6}" y="{_f(T + ph - frac * ph + 4)}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{L + pw / 2}" y="{T + ph + 36}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="{L - 42}" y="{T + ph / 2}" text-anchor="middle" transform="rotate(-90 {L - 42} {T + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{L + pw / 2}" y="{T - 10}" text-anchor="middle">{escape(title)}</text>')
    return out


def ternary(trajectories: Sequence[np.ndarray], names: Sequence[str] = ("1", "2", "3"), points: Optional[np.ndarray] = None, title: str = "") -> str:
    """Barycentric plot; vertex 0 bottom-left, 1 bottom-right, 2 top."""
    W, H, M = 480, 450, 50
    side = W - 2 * M
    corners = np.array([[M, H - M], [M + side, H - M], [M + side / 2, H - M - side * np.sqrt(3) / 2]])

    def proj(x):
        return np.asarray(x) @ corners

    body = [
        f'<polygon points="{" ".join(f"{_f(a)},{_f(b)}" for a, b in corners)}" fill="none" stroke="black"/>'
    ]
    offsets = [(-12, 16), (12, 16), (0, -8)]
    for (cx, cy), name, (ox, oy) in zip(corners, names, offsets):
        body.append(f'<text x="{_f(cx + ox)}" y="{_f(cy + oy)}" text-anchor="middle">{escape(name)}</text>')
    for i, states in enumerate(trajectories):
        xy = proj(states)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in xy)
        col = LINE_COLORS[i % len(LINE_COLORS)]
        body.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        body.append(f'<circle cx="{_f(xy[0, 0])}" cy="{_f(xy[0, 1])}" r="3" fill="{col}"/>')
    if points is not None:
        for a, b in proj(points):
            body.append(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="4" fill="black"/>')
    if title:
        body.append(f'<text x="{W / 2}" y="20" text-anchor="middle">{escape(title)}</text>')
    return _doc(W, H, body)


def line_chart(t: np.ndarray, series: np.ndarray, names: Sequence[str], xlabel: str = "t", ylabel: str = "x", title: str = "") -> str:
    """series[:, m] against t."""
    W, H, L, B, T, R = 640, 400, 60, 50, 30, 100
    pw, ph = W - L - R, H - T - B
    t = np.asarray(t, float)
    series = np.asarray(series, float)
    tr = (float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1)
    lo, hi = float(np.nanmin(series)), float(np.nanmax(series))
    yr = (lo, hi if hi > lo else lo + 1)
    body = []
    for m, name in enumerate(names):
        xs = L + (t - tr[0]) / (tr[1] - tr[0]) * pw
        ys = T + ph - (series[:, m] - yr[0]) / (yr[1] - yr[0]) * ph
        col = PALETTE[m % len(PALETTE)]
        body.append(f'<polyline points="{" ".join(f"{_f(a)},{_f(b)}" for a, b in zip(xs, ys))}" fill="none" stroke="{col}"/>')
        body.append(f'<text x="{W - R + 10}" y="{T + 16 * (m + 1)}" fill="{col}">{escape(name)}</text>')
    body += _axes(L, T, pw, ph, tr, yr, xlabel, ylabel, title)
    return _doc(W, H, body)
