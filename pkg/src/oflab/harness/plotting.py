"""Deterministic SVG figures."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence, TypedDict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "svg.hashsalt": "oflab",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (5.0, 3.4),
    "lines.linewidth": 1.4,
}


class Series(TypedDict, total=False):
    label: str
    x: Sequence[float]
    y: Sequence[float]
    kind: str  # "line" (default) or "scatter"


def emit_plot(
    series: Sequence[Series],
    path: str | Path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
) -> Path:
    """Write ``series`` to an SVG file; identical inputs give identical bytes."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in series:
            if s.get("kind") == "scatter":
                ax.scatter(s["x"], s["y"], s=12, label=s.get("label"))
            else:
                ax.plot(s["x"], s["y"], marker="o", markersize=3, label=s.get("label"))
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if any(s.get("label") for s in series):
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
