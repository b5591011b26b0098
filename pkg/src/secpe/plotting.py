"""SVG figures for CLI reports.

Output is byte-stable for identical inputs: the Agg backend is forced, the
SVG date stamp is dropped and element ids are salted with a fixed string.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "svg.hashsalt": "secpe",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def line_plot(
    path,
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    *,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    logy: bool = False,
    hline: float | None = None,
) -> Path:
    """One polyline per named series over a shared x axis, saved as SVG."""
    path = Path(path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        for name, ys in series.items():
            ax.plot(list(x), list(ys), marker="o", markersize=3, linewidth=1.2, label=name)
        if hline is not None:
            ax.axhline(hline, color="0.5", linestyle="--", linewidth=0.8)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
