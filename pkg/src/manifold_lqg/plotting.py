"""Static SVG regret plots rendered directly from a summary CSV."""
from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import SchemaMismatch

SUMMARY_COLUMNS = ("algorithm", "t", "regret_mean", "regret_std", "runs")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 20, 50


def read_summary(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in SUMMARY_COLUMNS if c not in header]
        if missing:
            raise SchemaMismatch(f"summary CSV is missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaMismatch("summary CSV has no data rows")
    groups = {}
    for row in rows:
        groups.setdefault(row["algorithm"], []).append((float(row["t"]), float(row["regret_mean"])))
    for pts in groups.values():
        pts.sort()
    return groups


def _fmt(x):
    return f"{x:.2f}"


def render_svg(groups) -> str:
    xs = [x for pts in groups.values() for x, _ in pts]
    ys = [y for pts in groups.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(max(ys), 0.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line class="axis" x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
        f'<text class="xlabel" x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">t</text>',
        f'<text class="ylabel" x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">cumulative regret</text>',
    ]
    for val, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text class="tick" x="{sx(val):.1f}" y="{TOP + ph + 16}" text-anchor="{anchor}" '
                   f'font-size="11">{val:g}</text>')
    for val in (y0, y1):
        out.append(f'<text class="tick" x="{LEFT - 6}" y="{sy(val) + 4:.1f}" text-anchor="end" '
                   f'font-size="11">{val:.3g}</text>')
    if y0 < 0 < y1:
        out.append(f'<line class="zero" x1="{LEFT}" y1="{sy(0):.2f}" x2="{LEFT + pw}" y2="{sy(0):.2f}" '
                   f'stroke="#999" stroke-dasharray="4 3"/>')
    for i, (label, pts) in enumerate(groups.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(f'<polyline class="curve" data-label="{escape(label)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{coords}"/>')
        ly = TOP + 14 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{lx + 26}" y="{ly}" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(summary_csv, out_svg) -> Path:
    """Write one regret curve per algorithm label in ``summary_csv``; nothing is written on error."""
    groups = read_summary(summary_csv)
    svg = render_svg(groups)
    out = Path(out_svg)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    return out
