"""Deterministic SVG figures: the shape-sphere trajectory and the complexity trace."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["sphere_svg", "complexity_svg"]

_RC = {"svg.hashsalt": "pureshape", "svg.fonttype": "none", "path.simplify": False}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def sphere_svg(points, path, collisions=None, title: str = "") -> Path:
    """Orthographic views of a shape-sphere curve from the ``n3`` and ``n1`` axes.

    Front-hemisphere segments are solid, back-hemisphere ones dashed.
    """
    pts = np.asarray(points, dtype=float)
    with matplotlib.rc_context(_RC):
        fig, axes = plt.subplots(1, 2, figsize=(8, 4))
        ring = np.linspace(0, 2 * np.pi, 361)
        for ax, (i, j, depth), label in zip(axes, ((0, 1, 2), (1, 2, 0)), ("view from n3", "view from n1")):
            ax.plot(np.cos(ring), np.sin(ring), color="0.6", lw=0.8)
            front = pts[:, depth] >= 0
            for mask, style in ((front, "-"), (~front, "--")):
                xs = np.where(mask, pts[:, i], np.nan)
                ys = np.where(mask, pts[:, j], np.nan)
                ax.plot(xs, ys, style, color="C0", lw=1.0)
            ax.plot(pts[0, i], pts[0, j], "o", color="C2", ms=4)
            ax.plot(pts[-1, i], pts[-1, j], "s", color="C3", ms=4)
            if collisions is not None:
                c = np.asarray(collisions)
                vis = c[:, depth] >= 0
                ax.plot(c[vis, i], c[vis, j], "x", color="k", ms=6)
            ax.set_aspect("equal")
            ax.set_xlim(-1.05, 1.05)
            ax.set_ylim(-1.05, 1.05)
            ax.set_title(label)
            ax.set_xticks([])
            ax.set_yticks([])
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def complexity_svg(s, com, path, janus_s=None, title: str = "") -> Path:
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(s, com, color="C0", lw=1.0)
        if janus_s is not None:
            ax.axvline(janus_s, color="C3", lw=0.8, ls="--")
        ax.set_xlabel("arc length s")
        ax.set_ylabel("complexity -C")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
