"""SVG figures: embedding scatters, cluster scatters and sweep curves."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import InputError  # noqa: E402

# fixed salt and no date keep the SVG bytes reproducible
_SVG_META = {"Date": None}
matplotlib.rcParams["svg.hashsalt"] = "graphssl"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    return path


def scatter_embedding(coords, labels=None, path=None, labeled=None, title=None):
    """Scatter of 1-D or 2-D node coordinates coloured by ``labels``.

    1-D coordinates are drawn against the node index. ``labeled`` marks
    labeled nodes with a black outline.
    """
    X = np.asarray(coords, dtype=float)
    if X.size == 0:
        raise InputError("nothing to plot")
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] == 1:
        X = np.column_stack([np.arange(X.shape[0]), X[:, 0]])
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.scatter(X[:, 0], X[:, 1], c=labels, s=8, cmap="tab10", vmin=0, vmax=9)
    if labeled is not None and len(labeled):
        idx = np.asarray(labeled)
        ax.scatter(X[idx, 0], X[idx, 1], s=30, facecolors="none", edgecolors="k", linewidths=0.8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    if path is not None:
        _save(fig, path)
    return fig


def cluster_scatter(points, labels, path=None, labeled=None, title=None):
    """Data points in their original 2-D coordinates, coloured by cluster."""
    return scatter_embedding(np.asarray(points)[:, :2], labels, path, labeled, title)


def sweep_lines(curves: Mapping[str, list[dict]], metric: str = "acc", path=None, xlabel=None, title=None):
    """Mean curve with a +/- 1 std band per variant.

    ``curves`` maps a variant name to its aggregate rows (as produced by
    ``ExperimentReport.aggregates``).
    """
    if not curves or not any(curves.values()):
        raise InputError("no sweep data to plot")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs_all = []
    for name, rows in curves.items():
        rows = [r for r in rows if r[f"{metric}_mean"] is not None]
        x = np.array([float(r["sweep_value"]) for r in rows])
        m = np.array([r[f"{metric}_mean"] for r in rows])
        s = np.array([r[f"{metric}_std"] for r in rows])
        xs_all.append(x)
        (line,) = ax.plot(x, m, lw=2, label=name)
        ax.fill_between(x, m - s, m + s, color=line.get_color(), alpha=0.2, lw=0)
    xs = np.concatenate(xs_all)
    if xs.min() < xs.max():
        ax.set_xlim(xs.min(), xs.max())
    ax.set_xlabel(xlabel or "sweep value")
    ax.set_ylabel(metric.upper())
    ax.legend(fontsize=7)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    if path is not None:
        _save(fig, path)
    return fig


def emit_plots(kind: str, out_dir, **kwargs) -> list[Path]:
    """Render one kind of figure into ``out_dir``; returns the written paths.

    * ``scatter-embedding``: ``embeddings`` (name -> coords), ``labels``, optional ``labeled``.
    * ``cluster-scatter``: ``points``, ``predictions`` (name -> labels), optional ``labeled``.
    * ``sweep-lines``: ``curves`` (name -> aggregate rows), optional ``xlabel``.
    """
    out = Path(out_dir)
    paths = []
    if kind == "scatter-embedding":
        embeddings = kwargs["embeddings"]
        if not embeddings:
            raise InputError("no embeddings to plot")
        for name, coords in embeddings.items():
            p = out / f"embedding_{name}.svg"
            plt.close(scatter_embedding(coords, kwargs.get("labels"), p, kwargs.get("labeled"), name))
            paths.append(p)
    elif kind == "cluster-scatter":
        predictions = kwargs["predictions"]
        if not predictions:
            raise InputError("no predictions to plot")
        for name, labels in predictions.items():
            p = out / f"clusters_{name}.svg"
            plt.close(cluster_scatter(kwargs["points"], labels, p, kwargs.get("labeled"), name))
            paths.append(p)
    elif kind == "sweep-lines":
        for metric in ("nmi", "acc"):
            p = out / f"sweep_{metric}.svg"
            plt.close(sweep_lines(kwargs["curves"], metric, p, kwargs.get("xlabel")))
            paths.append(p)
    else:
        raise InputError(f"unknown plot kind {kind!r}")
    return paths
