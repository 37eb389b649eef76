"""Result serialization: CSV/JSON rows and SVG heatmaps of sweep grids."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Dict, Sequence
from xml.sax.saxutils import escape

from .sweep import ConfigResult

CSV_COLUMNS = [
    "channels", "radios", "capacity", "E", "E0", "throughput",
    "EE", "EE_star", "EE_fraction", "status", "wall_ms",
]
RELAX_COLUMNS = ["rho"] + CSV_COLUMNS

METRICS = {
    "capacity": ("capacity", "Network capacity"),
    "ee": ("EE", "Energy efficiency"),
    "ee_fraction": ("EE_fraction", "EE / EE*"),
}


def fmt(value: float) -> str:
    """Nine significant digits, the fixed float format of every output."""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.9g}"


def rounded(value: float) -> float:
    return float(fmt(value))


def result_row(res: ConfigResult, timings: bool = True) -> Dict[str, object]:
    rep = res.report
    vals = {
        "channels": res.config.channels,
        "radios": res.config.radios_per_node,
        "capacity": res.capacity,
        "E": rep.e_transmission if rep else math.nan,
        "E0": rep.e_sleep if rep else math.nan,
        "throughput": rep.throughput if rep else math.nan,
        "EE": rep.efficiency if rep else math.nan,
        "EE_star": rep.upper_bound if rep else math.nan,
        "EE_fraction": rep.efficiency_fraction if rep else math.nan,
        "status": res.status,
        "wall_ms": res.solver_stats.get("wall_ms", 0.0) if timings else 0.0,
    }
    return {k: (rounded(v) if isinstance(v, float) else v) for k, v in vals.items()}


def rows_to_csv(rows: Sequence[Dict[str, object]], columns: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def to_json(manifest: dict, rows: Sequence[Dict[str, object]]) -> str:
    return json.dumps(_json_safe({"manifest": manifest, "rows": list(rows)}), indent=2) + "\n"


# --------------------------------------------------------------------------
# SVG heatmap

_LOW = (247, 251, 255)
_HIGH = (8, 48, 107)


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(_LOW, _HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


class RaggedGridError(ValueError):
    pass


def grid_values(results: Sequence[ConfigResult], metric: str):
    key = METRICS[metric][0]
    channels = sorted({r.config.channels for r in results})
    radios = sorted({r.config.radios_per_node for r in results})
    cells = {(r.config.channels, r.config.radios_per_node): result_row(r)[key] for r in results}
    missing = [(c, r) for c in channels for r in radios if (c, r) not in cells]
    if missing:
        raise RaggedGridError(
            "incomplete grid; missing (channels, radios) cells: "
            + ", ".join(f"({c}, {r})" for c, r in missing)
        )
    return channels, radios, cells


def render_heatmap(results: Sequence[ConfigResult], metric: str = "capacity",
                   cell: int = 56) -> str:
    """Deterministic SVG: channels on x, radios on y, one labelled rect per cell."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    channels, radios, cells = grid_values(results, metric)
    finite = [v for v in cells.values() if isinstance(v, float) and math.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 0.0)
    span = hi - lo
    left, top, bottom = 60, 40, 50
    width = left + cell * len(channels) + 20
    height = top + cell * len(radios) + bottom
    title = METRICS[metric][1]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:g}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    # CSV order: channels major, radios minor; radios grow upwards
    for ci, c in enumerate(channels):
        for ri, r in enumerate(radios):
            v = cells[(c, r)]
            x = left + ci * cell
            y = top + (len(radios) - 1 - ri) * cell
            ok = isinstance(v, float) and math.isfinite(v)
            t = (v - lo) / span if ok and span > 0 else (1.0 if ok else 0.0)
            fill = _color(t) if ok else "#cccccc"
            ink = "#ffffff" if ok and t > 0.55 else "#000000"
            label = f"{v:.3g}" if ok else "n/a"
            out.append(
                f'<rect class="cell" data-channels="{c}" data-radios="{r}" x="{x}" y="{y}" '
                f'width="{cell}" height="{cell}" fill="{fill}" stroke="#ffffff"/>'
            )
            out.append(
                f'<text x="{x + cell / 2:g}" y="{y + cell / 2 + 4:g}" text-anchor="middle" '
                f'fill="{ink}">{label}</text>'
            )
    for ci, c in enumerate(channels):
        out.append(f'<text x="{left + ci * cell + cell / 2:g}" y="{top + cell * len(radios) + 16}" '
                   f'text-anchor="middle">{c}</text>')
    for ri, r in enumerate(radios):
        out.append(f'<text x="{left - 8}" y="{top + (len(radios) - 1 - ri) * cell + cell / 2 + 4:g}" '
                   f'text-anchor="end">{r}</text>')
    out.append(f'<text x="{left + cell * len(channels) / 2:g}" y="{height - 10}" '
               f'text-anchor="middle">channels</text>')
    ymid = top + cell * len(radios) / 2
    out.append(f'<text x="16" y="{ymid:g}" text-anchor="middle" '
               f'transform="rotate(-90 16 {ymid:g})">radios</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
