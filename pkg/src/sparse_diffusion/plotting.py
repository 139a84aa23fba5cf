"""Static SVG line plots of learning curves and sweep tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt and no date keep the SVG output reproducible
matplotlib.rcParams["svg.hashsalt"] = "sparse-diffusion"


def line_plot(path, x, series: dict, xlabel: str, ylabel: str, title: str = "", log_x: bool = False,
              log_y: bool = True, zero_line: bool = False) -> Path:
    """One line per entry of ``series``. ``log_y`` marks values that are already in dB."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, y in series.items():
        y = np.asarray(y, dtype=float)
        ax.plot(x[: len(y)], y, label=label, linewidth=1.2, marker="o" if len(y) < 30 else None, markersize=3)
    if log_x:
        ax.set_xscale("log")
    if zero_line:
        ax.axhline(0.0, color="k", linewidth=0.8, linestyle=":")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
