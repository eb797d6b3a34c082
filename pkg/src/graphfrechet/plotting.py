"""Static figures for experiment reports, rendered to PNG files.

Figures are drawn on a bare Agg canvas so no global pyplot state is touched,
and PNG metadata is stripped, keeping reruns byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_PNG_META = {"Software": None}


def _figure(width=6.4, height=4.0, ncols=1):
    fig = Figure(figsize=(width, height), dpi=100)
    FigureCanvasAgg(fig)
    axes = fig.subplots(1, ncols)
    return fig, axes


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_PNG_META)
    return path


def plot_objective_trace(objectives, irreducible: float, path) -> Path:
    """Reducible part of the objective per iteration, log scale."""
    obj = np.asarray(objectives, dtype=float)
    red = np.maximum(obj - irreducible, np.finfo(float).tiny)
    fig, ax = _figure()
    ax.semilogy(np.arange(obj.size), red, marker=".", lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective above the irreducible floor")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_histogram(hist, path) -> Path:
    """Observed mean spectrum histogram overlaid with the fitted model's."""
    fig, ax = _figure()
    edges = np.asarray(hist.edges)
    ax.stairs(hist.observed, edges, label="observed (mean over sample)", fill=True, alpha=0.4)
    ax.stairs(hist.fitted, edges, label="fitted model sample", lw=1.5)
    ax.set_xlabel("adjacency eigenvalue")
    ax.set_ylabel("count")
    ax.set_yscale("symlog", linthresh=1)
    ax.legend()
    return _save(fig, path)


def plot_adjacency_pair(observed, fitted, path, titles=("observation", "fitted representative")) -> Path:
    fig, axes = _figure(9.0, 4.5, ncols=2)
    for ax, A, title in zip(axes, (observed, fitted), titles):
        ax.imshow(np.asarray(A), cmap="Greys", interpolation="nearest")
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
    return _save(fig, path)


def plot_regression(query_times, p_fit, path, sample_times=None, planted=None) -> Path:
    """Fitted within-block probabilities against the predictor.

    `planted` is an optional callable ``t -> p(t)`` drawn as reference lines.
    """
    t = np.asarray(query_times, dtype=float)
    P = np.atleast_2d(np.asarray(p_fit, dtype=float))
    fig, ax = _figure()
    if planted is not None:
        grid = np.linspace(t.min(), t.max(), 101)
        ref = np.array([planted(x) for x in grid])
        for k in range(ref.shape[1]):
            ax.plot(grid, ref[:, k], color="0.6", lw=1, label="planted" if k == 0 else None)
    for k in range(P.shape[1]):
        ax.plot(t, P[:, k], "x", ms=8, label=f"fitted p[{k + 1}]")
    if sample_times is not None:
        ax.plot(sample_times, np.zeros(len(sample_times)), "|", color="k", label="sample times")
    ax.set_xlabel("t")
    ax.set_ylabel("within-block probability")
    ax.legend(fontsize="small")
    return _save(fig, path)
