"""Optional PNG rendering of a cardioid scan.

The CSV is the primary output; this module only draws it.  It uses the Agg
canvas directly, so no display or global pyplot state is touched.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from .scan import ScanTable, as_matrix

# 0 not converged, 1 converged but unresolved, 2 converged and resolved, 3 failed
_STATUS_CMAP = ListedColormap(["#d95f02", "#fdd49e", "#1b9e77", "#7f7f7f"])


def status_matrix(table: ScanTable) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    moduli = sorted({r["modulus"] for r in table.rows})
    angles = sorted({r["gamma"] for r in table.rows})
    out = np.zeros((len(angles), len(moduli)))
    for r in table.rows:
        if not r["status"].startswith("ok"):
            code = 3
        elif r["converged"]:
            code = 2 if r["resolved"] else 1
        else:
            code = 0
        out[angles.index(r["gamma"]), moduli.index(r["modulus"])] = code
    return np.array(moduli), np.array(angles), out


def _edges(x: np.ndarray) -> np.ndarray:
    if len(x) == 1:
        return np.array([x[0] - 0.5, x[0] + 0.5])
    mid = (x[1:] + x[:-1]) / 2
    return np.concatenate([[2 * x[0] - mid[0]], mid, [2 * x[-1] - mid[-1]]])


def plot_scan(table: ScanTable, path: str | Path, dpi: int = 120) -> Path:
    """Convergence status and last increment ratio over ``(|g|, gamma)``.

    The dashed curve is the cardioid boundary ``|g| = rho cos^2 gamma``.
    """
    path = Path(path)
    fig = Figure(figsize=(10, 4.2))
    FigureCanvasAgg(fig)
    ax1, ax2 = fig.subplots(1, 2, sharey=True)

    moduli, angles, status = status_matrix(table)
    ax1.pcolormesh(_edges(moduli), _edges(angles), status, cmap=_STATUS_CMAP, vmin=-0.5, vmax=3.5)
    ax1.set_title("status: diverging / unresolved / converged / failed", fontsize=9)

    _, _, ratio = as_matrix(table, "last_ratio")
    mesh = ax2.pcolormesh(_edges(moduli), _edges(angles), np.log10(np.clip(ratio, 1e-6, None)),
                          cmap="viridis", vmin=-4, vmax=1)
    fig.colorbar(mesh, ax=ax2, label="log10 |last increment ratio|")
    ax2.set_title("truncation ratio", fontsize=9)

    gam = np.linspace(-math.pi / 2, math.pi / 2, 201)
    for ax in (ax1, ax2):
        ax.plot(table.rho * np.cos(gam) ** 2, gam, "k--", lw=1)
        ax.set_xlim(*_edges(moduli)[[0, -1]])
        ax.set_ylim(*_edges(angles)[[0, -1]])
        ax.set_xlabel("|g|")
    ax1.set_ylabel("gamma = Arg(g)/2")
    fig.suptitle(f"N = {table.sc.N}, p = {table.momenta}, n_max = {table.n_max}, rho = {table.rho}",
                 fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    return path
