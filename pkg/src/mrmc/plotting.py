"""Raster copies of the sweep heatmaps via matplotlib (optional dependency)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

from .report import METRICS, grid_values
from .sweep import ConfigResult


def save_heatmap_png(results: Sequence[ConfigResult], metric: str, path: Path,
                     dpi: int = 120) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    channels, radios, cells = grid_values(results, metric)
    data = np.array([[cells[(c, r)] for c in channels] for r in radios], dtype=float)
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * len(channels), 1.2 + 0.6 * len(radios)))
    im = ax.imshow(data, origin="lower", cmap="Blues", aspect="auto")
    ax.set_xticks(range(len(channels)), [str(c) for c in channels])
    ax.set_yticks(range(len(radios)), [str(r) for r in radios])
    ax.set_xlabel("channels")
    ax.set_ylabel("radios")
    ax.set_title(METRICS[metric][1])
    vmax = np.nanmax(data) if np.isfinite(data).any() else 0.0
    for ri in range(len(radios)):
        for ci in range(len(channels)):
            v = data[ri, ci]
            if math.isfinite(v):
                ax.text(ci, ri, f"{v:.3g}", ha="center", va="center", fontsize=8,
                        color="white" if vmax and v > 0.55 * vmax else "black")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path


def save_relaxation_png(points: Sequence, path: Path, dpi: int = 120) -> Path:
    """EE and EE/EE* against the throughput fraction rho."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rhos = [rho for rho, _ in points]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(rhos, [rep.efficiency for _, rep in points], "o-", label="EE")
    ax.plot(rhos, [rep.upper_bound for _, rep in points], "--", color="grey", label="EE*")
    ax.set_xlabel("throughput fraction rho")
    ax.set_ylabel("energy efficiency")
    ax.legend(loc="best")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
