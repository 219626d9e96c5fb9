"""Figure rendering for the report path.

Everything draws through the Agg backend straight to PNG files next to
the delimited tables; nothing here opens a window.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .boundary import BoundaryTimeline
from .scaling import ExponentFit


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_timeline(path, tl: BoundaryTimeline, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = np.append(tl.breakpoints, tl.horizon)
    ys = np.append(tl.counts, tl.counts[-1])
    ax.step(xs, ys, where="post", lw=1.0)
    ax.set_xlabel("time")
    ax.set_ylabel("boundary edges")
    ax.set_title(title)
    return _finish(fig, path)


def save_loglog_fit(path, fit: ExponentFit, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    t = np.array([p[0] for p in fit.points])
    v = np.array([p[1] for p in fit.points])
    ax.loglog(t, v, "o", label="measured")
    grid = np.geomspace(t.min(), t.max(), 64)
    ax.loglog(
        grid,
        np.exp(fit.intercept) * grid**fit.slope,
        "-",
        label=f"slope {fit.slope:.3f} (se {fit.stderr:.3f})",
    )
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_probe_counts(path, rows: np.ndarray, title: str) -> Path:
    """rows: (probe_s, exterior edges, holes, size-one holes) per probe."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(rows[:, 0], rows[:, 1], label="exterior edges", lw=1.0)
    ax.plot(rows[:, 0], rows[:, 2], label="holes", lw=1.0)
    ax.plot(rows[:, 0], rows[:, 3], label="size-one holes", lw=1.0)
    ax.set_xlabel("probe time")
    ax.set_ylabel("count")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_ratio_curve(path, ts, lowers, uppers, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ts, uppers, marker="o", label="truncated mean")
    ax.plot(ts, lowers, marker="s", label="max(t tail, 1)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def save_contour_counts(path, ns, counts, bounds, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ns, counts, marker="o", label="exact count")
    ax.semilogy(ns, bounds, marker="^", label="exponential bound")
    ax.set_xlabel("set size")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)
