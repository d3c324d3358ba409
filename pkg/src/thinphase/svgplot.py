"""Static SVG line plots of sweep CSV files.

Output depends only on the CSV contents: fixed canvas, fixed colours per
curve, coordinates rounded to two decimals.  ``emit_gnuplot`` writes an
equivalent gnuplot script for people who prefer that route.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .sweep import read_csv

WIDTH, HEIGHT = 720, 480
MARGIN = dict(left=80, right=200, top=30, bottom=60)

STYLE = {
    "sigma_star_exact": ("#000000", "", "exact"),
    "sigma_star_approx": ("#d62728", "8,4", "first order"),
    "sigma_star_reference": ("#1f77b4", "2,3", "reference"),
    "sigma_star_high": ("#2ca02c", "10,3,2,3", "high-contrast limit"),
    "sigma_star_low": ("#9467bd", "4,4", "low-contrast limit"),
}
FALLBACK = ("#7f7f7f", "1,2")


class PlotError(ValueError):
    pass


def _linear_ticks(lo, hi, target=6):
    span = hi - lo
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo, hi):
    return [10.0 ** k for k in range(math.ceil(math.log10(lo) - 1e-9), math.floor(math.log10(hi) + 1e-9) + 1)]


def _fmt_tick(v, log):
    if log:
        k = round(math.log10(v))
        return f"1e{k}" if abs(k) > 2 else f"{v:g}"
    return f"{v:g}"


def render_svg(table, style="log-x", title=None) -> str:
    if style not in ("log-x", "log-log"):
        raise PlotError(f"style must be 'log-x' or 'log-log', got {style!r}")
    curves = table.curves
    if not curves:
        raise PlotError("no curves to plot")
    x = table.data["sigma2"]
    if len(x) < 1 or np.any(x <= 0):
        raise PlotError("sigma2 column must be positive and nonempty")
    ylog = style == "log-log"

    def shown(y):
        # nonpositive values have no place on a log axis and are left out
        return np.isfinite(y) & (y > 0) if ylog else np.isfinite(y)

    ys = np.concatenate([table.data[c][shown(table.data[c])] for c in curves])
    if ys.size == 0:
        raise PlotError("no plottable values")

    fx = np.log10
    fy = np.log10 if ylog else (lambda v: np.asarray(v, dtype=float))
    x0, x1 = float(fx(x.min())), float(fx(x.max()))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = float(fy(ys.min())), float(fy(ys.max()))
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5
    y0, y1 = y0 - pad, y1 + pad

    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def px(v):
        return L + (fx(v) - x0) / (x1 - x0) * (R - L)

    def py(v):
        return B - (fy(v) - y0) / (y1 - y0) * (B - T)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{(L + R) / 2:.2f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>')
    # ticks and grid
    for t in _log_ticks(10 ** x0, 10 ** x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{T}" x2="{X:.2f}" y2="{B}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{X:.2f}" y="{B + 16}" text-anchor="middle">{_fmt_tick(t, True)}</text>')
    yt = _log_ticks(10 ** y0, 10 ** y1) if ylog else _linear_ticks(y0, y1)
    for t in yt:
        Y = py(t)
        out.append(f'<line x1="{L}" y1="{Y:.2f}" x2="{R}" y2="{Y:.2f}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{L - 6}" y="{Y + 4:.2f}" text-anchor="end">{_fmt_tick(t, ylog)}</text>')
    out.append(f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>')
    out.append(f'<text x="{(L + R) / 2:.2f}" y="{HEIGHT - 18}" text-anchor="middle" font-size="14">σ₂</text>')
    out.append(f'<text x="20" y="{(T + B) / 2:.2f}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 20 {(T + B) / 2:.2f})">σ*</text>')

    for k, c in enumerate(curves):
        colour, dash, label = STYLE.get(c, FALLBACK + (c,))
        y = table.data[c]
        keep = shown(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline class="curve" data-column="{c}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = T + 20 + 20 * k
        out.append(f'<line x1="{R + 12}" y1="{ly}" x2="{R + 42}" y2="{ly}" stroke="{colour}" '
                   f'stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text class="legend" x="{R + 48}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path, svg_path, style="log-x", title=None) -> Path:
    """Render ``csv_path`` (a sweep CSV) to ``svg_path``."""
    table = read_csv(csv_path)
    if title is None:
        cfg = table.metadata.get("config")
        title = table.config.name if cfg else None
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text(render_svg(table, style, title))
    return svg_path


def emit_gnuplot(csv_path, script_path, style="log-x") -> Path:
    """Write a gnuplot script that plots ``csv_path`` directly."""
    table = read_csv(csv_path)
    if not table.curves:
        raise PlotError("no curves to plot")
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key outside right",
        "set logscale x",
        "set xlabel 'sigma_2'",
        "set ylabel 'sigma*'",
    ]
    if style == "log-log":
        lines.append("set logscale y")
    plots = []
    for c in table.curves:
        col = table.columns.index(c) + 1
        label = STYLE.get(c, FALLBACK + (c,))[2]
        plots.append(f"'{Path(csv_path).name}' every ::1 using 1:{col} with lines title '{label}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    script_path = Path(script_path)
    script_path.write_text("\n".join(lines) + "\n")
    return script_path
