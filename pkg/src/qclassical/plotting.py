"""Figure rendering for the trajectory report path."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def render_trajectory_figure(
    table: np.ndarray, path, dephasing_time: float | None = None, fmt: str = "png"
):
    """Plot the exact and map-propagated transverse expectation values.

    ``table`` has columns (t, x_exact, x_ncgd); the figure goes alongside
    the delimited output of the same run.  ``fmt`` is passed through since
    the path may be a temporary name without the final extension.
    """
    t, x_exact, x_ncgd = table.T
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, x_exact, color="tab:blue", lw=1.8, label="exact, dephased at s")
    ax.plot(t, x_ncgd, color="tab:pink", lw=1.8, ls="--", label="map propagation")
    if dephasing_time is not None:
        ax.axvline(dephasing_time, color="0.6", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\langle\sigma_x\rangle(t)$")
    ax.set_xlim(t[0], t[-1])
    ax.legend(frameon=False)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150, format=fmt)
    plt.close(fig)
