"""Optional PNG rendering of figure CSVs (matplotlib, headless backend)."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_figure"]


def _table(text):
    return np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)


def plot_figure(fig, curves, path):
    """Draw analytic lines and empirical markers for each curve; returns ``path``."""
    f, ax = plt.subplots(figsize=(5.5, 4.0))
    for k, (name, text) in enumerate(curves.items()):
        data = _table(text)
        color = f"C{k}"
        ax.plot(data[:, 0], data[:, 1], color=color, label=name)
        step = max(1, data.shape[0] // 20)
        ax.plot(data[::step, 0], data[::step, 2], "o", color=color, markersize=3, fillstyle="none")
    if fig == 6:
        ax.set_xscale("log")
        ax.set_xlabel("SNR0 / A")
        ax.set_ylabel("connectivity probability")
    else:
        ax.set_xlabel("distance from target")
        ax.set_ylabel("CDF")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    f.tight_layout()
    # fixed metadata keeps reruns byte-identical
    f.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(f)
    return path
