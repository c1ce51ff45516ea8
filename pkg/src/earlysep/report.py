"""CSV and static-SVG emission for sweep results.

The CSV aggregates mean and population standard deviation over the seeded
runs of each cell (macro-averaged F1), fixed to six decimals. Each metric
gets one line chart: observation-window hours on the x axis, one polyline
per variant, plain markup with no scripting.
"""

from __future__ import annotations

import math
from pathlib import Path

__all__ = ["sweep_csv_text", "render_metric_svg", "write_sweep_reports"]

CSV_HEADER = "slot,variant,run_count,mean_acc,std_acc,mean_f1,std_f1"

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def sweep_csv_text(cells) -> str:
    lines = [CSV_HEADER]
    for c in cells:
        lines.append(
            f"{c.slot_hours},{c.variant},{c.run_count},"
            f"{c.mean_accuracy:.6f},{c.std_accuracy:.6f},"
            f"{c.mean_f1:.6f},{c.std_f1:.6f}")
    return "\n".join(lines) + "\n"


def render_metric_svg(cells, metric: str, title: str) -> str:
    """One line chart of a per-cell metric ('accuracy' or 'macro_f1')."""
    attr = {"accuracy": "mean_accuracy", "macro_f1": "mean_f1"}[metric]
    width, height = 720, 440
    left, right, top, bottom = 70, 180, 40, 60
    plot_w = width - left - right
    plot_h = height - top - bottom

    slots = sorted({c.slot_hours for c in cells})
    variants = []
    for c in cells:
        if c.variant not in variants:
            variants.append(c.variant)
    lo, hi = min(slots), max(slots)
    span = max(hi - lo, 1)

    def x_at(slot):
        return left + plot_w * (slot - lo) / span

    def y_at(value):
        return top + plot_h * (1.0 - value)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
        # axes
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">observation window (hours)</text>',
        f'<text x="20" y="{top + plot_h / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13" transform="rotate(-90 20 {top + plot_h / 2:.1f})">{metric}</text>',
    ]
    for i in range(6):  # y ticks 0.0 .. 1.0
        value = i / 5.0
        y = y_at(value)
        parts.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w}" y2="{y:.1f}" '
                     f'stroke="#dddddd" stroke-width="0.5"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{value:.1f}</text>')
    for slot in slots:
        x = x_at(slot)
        parts.append(f'<line x1="{x:.1f}" y1="{top + plot_h}" x2="{x:.1f}" y2="{top + plot_h + 4}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{top + plot_h + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{slot}</text>')

    for vi, variant in enumerate(variants):
        color = _PALETTE[vi % len(_PALETTE)]
        points = []
        for c in cells:
            if c.variant != variant or c.run_count == 0:
                continue
            value = getattr(c, attr)
            if math.isnan(value):
                continue
            points.append((c.slot_hours, value))
        points.sort()
        if points:
            coords = " ".join(f"{x_at(s):.1f},{y_at(v):.1f}" for s, v in points)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
            for s, v in points:
                parts.append(f'<circle cx="{x_at(s):.1f}" cy="{y_at(v):.1f}" r="2.5" fill="{color}"/>')
        # legend entry
        ly = top + 16 + 20 * vi
        lx = left + plot_w + 16
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly + 4}" font-family="sans-serif" '
                     f'font-size="12">{variant}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_sweep_reports(cells, out_dir, runs: int) -> dict:
    """Write sweep.csv plus one SVG per metric; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    csv_path = out_dir / "sweep.csv"
    csv_path.write_text(sweep_csv_text(cells), encoding="utf-8")
    paths["csv"] = csv_path

    note = f"mean over {runs} seeded runs (population std in CSV)"
    for metric in ("accuracy", "macro_f1"):
        svg_path = out_dir / f"{metric}.svg"
        svg_path.write_text(render_metric_svg(cells, metric, f"{metric}: {note}"),
                            encoding="utf-8")
        paths[metric] = svg_path
    return paths
