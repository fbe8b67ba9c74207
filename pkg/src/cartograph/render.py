"""Standalone SVG rendering of data maps and training curves.

Emitted documents are SVG 1.1, UTF-8, built from fixed-format numbers with
no timestamps, so identical inputs produce byte-identical files.  Every
document embeds a metadata comment recording provenance (run id, sampling
seed and cap, correctness bin edges) and the exact affine transform mapping
metric space to pixel space, so marker coordinates can be inverted.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from ._rng import generator, sample_without_replacement
from ._validation import check_int
from .carto import RegionAssignment
from .dynamics import MetricsTable
from .trainer import CurveLog

REGION_COLORS = {
    "easy_to_learn": "#d62728",  # red triangles
    "hard_to_learn": "#1f77b4",  # blue circles
    "ambiguous": "#000000",  # black pluses
    "other": "#999999",  # gray squares
}
REGION_MARKERS = {
    "easy_to_learn": "triangle",
    "hard_to_learn": "circle",
    "ambiguous": "plus",
    "other": "square",
}
VARIABILITY_MAX = 0.5  # a [0,1]-bounded series cannot exceed this std dev


@dataclass(frozen=True)
class MapStyle:
    sample_cap: int = 25000
    sample_seed: int = 0
    correctness_bins: int | None = None  # None: min(5, epochs + 1)
    width: int = 720
    height: int = 560
    show_density: bool = False

    def __post_init__(self):
        check_int(self.sample_cap, "sample_cap", minimum=1)
        check_int(self.width, "width", minimum=1)
        check_int(self.height, "height", minimum=1)


@dataclass(frozen=True)
class CurveStyle:
    width: int = 640
    height: int = 420


def map_transform(style: MapStyle) -> tuple[float, float, float, float]:
    """Affine map from (variability, confidence) to pixels.

    Returns (x0, x_scale, y0, y_scale) with ``x_px = x0 + x_scale * v`` and
    ``y_px = y0 + y_scale * c``; invert with the same four numbers.
    """
    left, right, top, bottom = _map_margins(style)
    plot_w = style.width - left - right
    plot_h = style.height - top - bottom
    return (float(left), plot_w / VARIABILITY_MAX, float(top + plot_h), -float(plot_h))


def _map_margins(style: MapStyle) -> tuple[int, int, int, int]:
    top = 64 if style.show_density else 28
    right = 190 if style.show_density else 150
    return 64, right, top, 48


def _comment(text: str) -> str:
    return f"<!-- {text.replace('--', '__')} -->"


def _marker_defs(size: float = 4.0) -> str:
    s = size
    h = s * 0.866
    return (
        "<defs>\n"
        f'<g id="mk-triangle"><polygon points="0,{-s:.2f} {h:.2f},{s / 2:.2f} {-h:.2f},{s / 2:.2f}"/></g>\n'
        f'<g id="mk-circle"><circle r="{s * 0.75:.2f}"/></g>\n'
        f'<g id="mk-plus" stroke-width="1.6" fill="none">'
        f'<path d="M{-s:.2f},0H{s:.2f}M0,{-s:.2f}V{s:.2f}"/></g>\n'
        f'<g id="mk-square"><rect x="{-s * 0.6:.2f}" y="{-s * 0.6:.2f}" '
        f'width="{s * 1.2:.2f}" height="{s * 1.2:.2f}"/></g>\n'
        "</defs>"
    )


def _bin_edges(n_bins: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_bins + 1)


def _bin_opacity(bin_index: int, n_bins: int) -> float:
    if n_bins <= 1:
        return 1.0
    return 0.25 + 0.75 * bin_index / (n_bins - 1)


def _axis(
    x0: float,
    y0: float,
    x1: float,
    y1: float,
    x_ticks: list[tuple[float, str]],
    y_ticks: list[tuple[float, str]],
    x_label: str,
    y_label: str,
) -> list[str]:
    parts = [
        f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" '
        'fill="none" stroke="#444444" stroke-width="1"/>'
    ]
    for px, label in x_ticks:
        parts.append(f'<line x1="{px:.2f}" y1="{y0:.2f}" x2="{px:.2f}" y2="{y0 + 5:.2f}" stroke="#444444"/>')
        parts.append(
            f'<text x="{px:.2f}" y="{y0 + 18:.2f}" font-size="11" text-anchor="middle" '
            f'fill="#222222">{label}</text>'
        )
    for py, label in y_ticks:
        parts.append(f'<line x1="{x0 - 5:.2f}" y1="{py:.2f}" x2="{x0:.2f}" y2="{py:.2f}" stroke="#444444"/>')
        parts.append(
            f'<text x="{x0 - 8:.2f}" y="{py + 4:.2f}" font-size="11" text-anchor="end" '
            f'fill="#222222">{label}</text>'
        )
    mid_x = (x0 + x1) / 2
    mid_y = (y0 + y1) / 2
    parts.append(
        f'<text x="{mid_x:.2f}" y="{y0 + 36:.2f}" font-size="13" text-anchor="middle" '
        f'fill="#111111">{x_label}</text>'
    )
    parts.append(
        f'<text x="{x0 - 44:.2f}" y="{mid_y:.2f}" font-size="13" text-anchor="middle" '
        f'fill="#111111" transform="rotate(-90 {x0 - 44:.2f} {mid_y:.2f})">{y_label}</text>'
    )
    return parts


def render_map(table: MetricsTable, regions: RegionAssignment, style: MapStyle | None = None) -> str:
    """Scatter the table as a data map: x variability, y confidence, marker
    shape/color by region, opacity by correctness bin.

    Tables larger than ``style.sample_cap`` are thinned to exactly the cap by
    a seeded uniform subsample.
    """
    style = style or MapStyle()
    n = len(table)
    if n == 0:
        raise ValueError("metrics table is empty")

    if n > style.sample_cap:
        picked = sample_without_replacement(n, style.sample_cap, generator(style.sample_seed))
        picked = np.sort(picked)
    else:
        picked = np.arange(n)

    n_bins = style.correctness_bins
    if n_bins is None:
        n_bins = min(5, int(table.epochs_used.max()) + 1)
    n_bins = max(1, n_bins)
    edges = _bin_edges(n_bins)

    x0, x_scale, y0, y_scale = map_transform(style)
    left, right, top, bottom = _map_margins(style)
    plot_x1 = style.width - right
    plot_y1 = top

    run_id = table.meta.run_id if table.meta is not None else "unknown"
    edge_text = ",".join(format(edge, ".4g") for edge in edges)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'version="1.1" width="{style.width}" height="{style.height}" '
        f'viewBox="0 0 {style.width} {style.height}">',
        _comment(
            f"cartograph-map run_id={run_id} n={n} shown={picked.size} "
            f"sample_cap={style.sample_cap} sample_seed={style.sample_seed} "
            f"correctness_bin_edges=[{edge_text}] "
            f"transform x_px={x0:.6g}+{x_scale:.6g}*variability "
            f"y_px={y0:.6g}+{y_scale:.6g}*confidence"
        ),
        f'<rect width="{style.width}" height="{style.height}" fill="#ffffff"/>',
        _marker_defs(),
    ]

    x_ticks = [(x0 + x_scale * v, format(v, "g")) for v in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)]
    y_ticks = [(y0 + y_scale * c, format(c, "g")) for c in (0.0, 0.25, 0.5, 0.75, 1.0)]
    parts.extend(
        _axis(x0, float(top + (style.height - top - bottom)), float(plot_x1), float(plot_y1),
              x_ticks, y_ticks, "variability", "confidence")
    )

    if style.show_density:
        parts.extend(_density_strip(table, picked, style, x0, x_scale, top))

    bins = np.clip(np.searchsorted(edges, table.correctness, side="right") - 1, 0, n_bins - 1)
    for i in picked:
        i = int(i)
        region = regions.regions.get(table.guids[i], "other")
        marker = REGION_MARKERS[region]
        color = REGION_COLORS[region]
        px = x0 + x_scale * float(table.variability[i])
        py = y0 + y_scale * float(table.confidence[i])
        opacity = _bin_opacity(int(bins[i]), n_bins)
        paint = f'stroke="{color}"' if marker == "plus" else f'fill="{color}"'
        parts.append(
            f'<use xlink:href="#mk-{marker}" x="{px:.2f}" y="{py:.2f}" {paint} opacity="{opacity:.3f}"/>'
        )

    parts.extend(_map_legend(style, n_bins, edges, plot_x1))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _density_strip(table, picked, style, x0, x_scale, top) -> list[str]:
    counts, edges = np.histogram(table.variability[picked], bins=24, range=(0.0, VARIABILITY_MAX))
    peak = counts.max() if counts.max() > 0 else 1
    band_h = 30.0
    base = top - 6.0
    parts = []
    for k, count in enumerate(counts):
        if count == 0:
            continue
        bx = x0 + x_scale * edges[k]
        bw = x_scale * (edges[k + 1] - edges[k])
        bh = band_h * count / peak
        parts.append(
            f'<rect x="{bx:.2f}" y="{base - bh:.2f}" width="{bw:.2f}" height="{bh:.2f}" '
            'fill="#bbbbbb"/>'
        )
    return parts


def _map_legend(style, n_bins, edges, plot_x1) -> list[str]:
    lx = plot_x1 + 18
    ly = 40
    parts = [f'<text x="{lx}" y="{ly - 16}" font-size="12" fill="#111111">regions</text>']
    names = {
        "easy_to_learn": "easy to learn",
        "hard_to_learn": "hard to learn",
        "ambiguous": "ambiguous",
        "other": "other",
    }
    for region in ("easy_to_learn", "hard_to_learn", "ambiguous", "other"):
        marker = REGION_MARKERS[region]
        color = REGION_COLORS[region]
        paint = f'stroke="{color}"' if marker == "plus" else f'fill="{color}"'
        parts.append(f'<use xlink:href="#mk-{marker}" x="{lx + 6}" y="{ly - 4}" {paint}/>')
        parts.append(f'<text x="{lx + 18}" y="{ly}" font-size="11" fill="#222222">{names[region]}</text>')
        ly += 18
    ly += 10
    parts.append(f'<text x="{lx}" y="{ly - 4}" font-size="12" fill="#111111">correctness</text>')
    for k in range(n_bins):
        opacity = _bin_opacity(k, n_bins)
        lo, hi = edges[k], edges[k + 1]
        bracket = "]" if k == n_bins - 1 else ")"
        parts.append(
            f'<rect x="{lx}" y="{ly + 4}" width="10" height="10" fill="#555555" '
            f'opacity="{opacity:.3f}"/>'
        )
        parts.append(
            f'<text x="{lx + 16}" y="{ly + 13}" font-size="11" fill="#222222">'
            f"[{lo:.2g}, {hi:.2g}{bracket}</text>"
        )
        ly += 16
    return parts


SERIES_COLORS = {"train": "#1f77b4", "validation": "#ff7f0e"}


def render_curves(curve: CurveLog, style: CurveStyle | None = None, run_id: str = "unknown") -> str:
    """Plot train and validation accuracy per epoch as two polylines."""
    style = style or CurveStyle()
    n_epochs = len(curve)
    if n_epochs == 0:
        raise ValueError("curve log is empty")

    left, right, top, bottom = 56, 130, 24, 44
    plot_w = style.width - left - right
    plot_h = style.height - top - bottom
    span = max(n_epochs - 1, 1)

    def px(epoch: int) -> float:
        return left + plot_w * epoch / span

    def py(acc: float) -> float:
        return top + plot_h * (1.0 - acc)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{style.width}" height="{style.height}" viewBox="0 0 {style.width} {style.height}">',
        _comment(
            f"cartograph-curves run_id={escape(run_id)} epochs={n_epochs} "
            f"transform x_px={left}+{plot_w / span:.6g}*epoch y_px={top + plot_h}+{-plot_h}*accuracy"
        ),
        f'<rect width="{style.width}" height="{style.height}" fill="#ffffff"/>',
    ]

    tick_step = max(1, (n_epochs + 9) // 10)
    x_ticks = [(px(e), str(e)) for e in range(0, n_epochs, tick_step)]
    y_ticks = [(py(c), format(c, "g")) for c in (0.0, 0.25, 0.5, 0.75, 1.0)]
    parts.extend(
        _axis(float(left), float(top + plot_h), float(left + plot_w), float(top),
              x_ticks, y_ticks, "epoch", "accuracy")
    )

    series = (
        ("train", curve.train_accuracy),
        ("validation", curve.validation_accuracy),
    )
    ly = 48
    for name, values in series:
        if any(v != v for v in values):  # NaN: series was never measured
            continue
        color = SERIES_COLORS[name]
        points = " ".join(f"{px(e):.2f},{py(v):.2f}" for e, v in enumerate(values))
        if n_epochs > 1:
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.8"/>'
            )
        for e, v in enumerate(values):
            parts.append(f'<circle cx="{px(e):.2f}" cy="{py(v):.2f}" r="2.5" fill="{color}"/>')
        lx = left + plot_w + 14
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 16}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 22}" y="{ly}" font-size="11" fill="#222222">{name}</text>')
        ly += 18
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
