"""Figure rendering for solved profiles and parameter sweeps.

Figures are written to files (SVG by default) next to the CSV/JSON
output; nothing here is interactive.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import GridProfile

__all__ = ["profile_figure", "sweep_figure", "save_figure"]

# stable ids inside SVG output
matplotlib.rcParams["svg.hashsalt"] = "nehari-waves"


def profile_figure(W: GridProfile, AW: GridProfile, title: str | None = None):
    """Single panel with the profile and its window average."""
    phi = W.spec.points()
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(phi, W.values, lw=1.2, label="W")
    ax.plot(phi, AW.values, lw=1.2, label="AW")
    ax.axhline(0.0, color="0.8", lw=0.6, zorder=0)
    ax.set_xlabel(r"$\varphi$")
    ax.set_xlim(-W.spec.K, W.spec.K)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    return fig


def sweep_figure(panels):
    """Grid of profile panels: one row per sigma2, one column per (p, q).

    ``panels`` is a list of dicts with keys sigma2, p, q, W, AW; rows keep
    the order in which sigma2 values first appear, columns likewise.
    """
    sigmas, pairs = [], []
    for entry in panels:
        if entry["sigma2"] not in sigmas:
            sigmas.append(entry["sigma2"])
        if (entry["p"], entry["q"]) not in pairs:
            pairs.append((entry["p"], entry["q"]))
    n_rows, n_cols = len(sigmas), len(pairs)
    fig, axes = plt.subplots(
        n_rows, n_cols, figsize=(5.0 * n_cols, 2.6 * n_rows), squeeze=False
    )
    index = {(e["sigma2"], (e["p"], e["q"])): e for e in panels}
    for i, s2 in enumerate(sigmas):
        for j, pq in enumerate(pairs):
            ax = axes[i][j]
            entry = index.get((s2, pq))
            if entry is None:
                ax.set_axis_off()
                continue
            W, AW = entry["W"], entry["AW"]
            phi = W.spec.points()
            ax.plot(phi, W.values, lw=1.0, label="W")
            ax.plot(phi, AW.values, lw=1.0, label="AW")
            ax.axhline(0.0, color="0.8", lw=0.5, zorder=0)
            ax.set_xlim(-W.spec.K, W.spec.K)
            ax.set_title(
                rf"$\sigma^2={s2:g}$,  $p={pq[0]:g}$, $q={pq[1]:g}$", fontsize=9
            )
            if i == 0 and j == 0:
                ax.legend(loc="upper right", frameon=False, fontsize=8)
            if i == n_rows - 1:
                ax.set_xlabel(r"$\varphi$")
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    """Write the figure to ``path`` (format from the extension) and close it."""
    fig.savefig(path, metadata=_stable_metadata(str(path)))
    plt.close(fig)


def _stable_metadata(path):
    # drop the volatile creation date so repeated runs write identical files
    if path.endswith(".svg"):
        return {"Date": None}
    if path.endswith(".png"):
        return None
    return None
