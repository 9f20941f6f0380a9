"""Table and plot rendering for metric summaries.

All output is byte-deterministic for a fixed input: fixed column orders,
3-decimal number formatting, and hand-assembled SVG (no plotting backend).
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .errors import EmptySummaries
from .metrics import MetricSummary

SUMMARY_COLUMNS = (
    "n", "n_invalid", "tbi", "tbi_std", "mae", "mae_std",
    "n_early", "early_mean", "n_late", "late_mean", "normalized_mad",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def summary_row(summary: MetricSummary) -> list:
    return [
        summary.n, summary.n_invalid, summary.tbi_s, summary.tbi_std_s,
        summary.mae_s, summary.mae_std_s, summary.n_early, summary.early_mean_s,
        summary.n_late, summary.late_mean_s, summary.normalized_mad,
    ]


def render_report(header: Sequence[str], rows: Sequence[Sequence], fmt: str = "csv") -> bytes:
    """Render a table as CSV or GitHub markdown, 3-decimal floats."""
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        return ("\n".join(lines) + "\n").encode()
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(_fmt(v) for v in row) + " |" for row in rows]
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def render_position_plot(summaries: Mapping[tuple, MetricSummary],
                         width: int = 640, height: int = 420) -> bytes:
    """SVG line chart of normalized deviation vs position bucket.

    `summaries` is keyed (series_label, bucket); one polyline per series.
    """
    if not summaries:
        raise EmptySummaries("nothing to plot")

    series: dict[str, dict[int, float]] = {}
    for (label, bucket), summ in summaries.items():
        series.setdefault(str(label), {})[int(bucket)] = summ.normalized_mad

    margin_l, margin_r, margin_t, margin_b = 60, 150, 30, 50
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    y_max = max(max(pts.values()) for pts in series.values())
    y_max = y_max if y_max > 0 else 1.0

    def x_of(bucket: int) -> float:
        return margin_l + (bucket - 1) / 4 * plot_w

    def y_of(v: float) -> float:
        return margin_t + plot_h * (1 - v / y_max)

    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
        f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle" '
        f'font-size="13">Event position bucket (1=start, 5=end)</text>',
        f'<text x="16" y="{margin_t + plot_h / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {margin_t + plot_h / 2:.1f})">Normalized mean absolute deviation</text>',
    ]
    for bucket in range(1, 6):
        x = x_of(bucket)
        parts.append(f'<line x1="{x:.1f}" y1="{margin_t + plot_h}" x2="{x:.1f}" '
                     f'y2="{margin_t + plot_h + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{margin_t + plot_h + 20}" text-anchor="middle" '
                     f'font-size="12">{bucket}</text>')
    for k in range(5):
        v = y_max * k / 4
        y = y_of(v)
        parts.append(f'<line x1="{margin_l - 5}" y1="{y:.1f}" x2="{margin_l}" '
                     f'y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{margin_l - 8}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-size="11">{v:.3f}</text>')

    for i, label in enumerate(sorted(series)):
        pts = series[label]
        color = palette[i % len(palette)]
        coords = " ".join(f"{x_of(b):.1f},{y_of(pts[b]):.1f}" for b in sorted(pts))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = margin_t + 16 * (i + 1)
        lx = margin_l + plot_w + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 26}" y="{ly}" font-size="12">{label}</text>')

    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode()
