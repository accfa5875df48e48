"""PNG figures for experiment reports.

Figures are built on ``matplotlib.figure.Figure`` with the Agg canvas, so no
global pyplot state or display is touched.
"""

from __future__ import annotations

import io

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .gridio import _atomic_write

CLASS_COLORS = ("tab:blue", "tab:red")


def _save(fig: Figure, path) -> None:
    FigureCanvasAgg(fig)
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=100, metadata={"Software": None})
    _atomic_write(path, buf.getvalue())


def projection_figure(panels: dict, labels, path) -> None:
    """Scatter of 2D discriminant coordinates, one panel per feature space.

    ``panels`` maps a space name to an ``(n, 2)`` coordinate array.
    """
    labels = np.asarray(labels)
    fig = Figure(figsize=(4.0 * len(panels), 3.6))
    for k, (space, coords) in enumerate(panels.items()):
        ax = fig.add_subplot(1, len(panels), k + 1)
        for c in np.unique(labels):
            sel = labels == c
            ax.scatter(coords[sel, 0], coords[sel, 1], s=10, alpha=0.7,
                       color=CLASS_COLORS[int(c) % len(CLASS_COLORS)], label=f"class {c}")
        ax.set_title(f"{space} space")
        ax.set_xlabel("pLDA direction")
        ax.set_ylabel("residual principal direction")
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def cpv_figure(curves: dict, path, max_components: int = 40) -> None:
    """Cumulative percent variance against the number of components."""
    fig = Figure(figsize=(4.5, 3.4))
    ax = fig.add_subplot(1, 1, 1)
    for space, cpv in curves.items():
        cpv = np.asarray(cpv)[:max_components]
        ax.plot(np.arange(1, cpv.size + 1), 100.0 * cpv, marker=".", label=f"{space} space")
    ax.axhline(95.0, color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("number of components")
    ax.set_ylabel("CPV (%)")
    ax.set_ylim(0, 101)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
