"""Figure rendering for the report path.

All renderers draw from in-memory time series or grid tables and write
a single file; the delimited output stays the contract, these files are
the human-readable view.  The Agg backend is forced so rendering works
headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .integrator import TimeSeries  # noqa: E402

_META = {"Software": None, "Date": None}  # keep PNG bytes reproducible


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=130, metadata=_META)
    plt.close(fig)
    return path


def plot_phase_portrait(
    series: Sequence[TimeSeries], path: str | Path, title: str = "phase portrait"
) -> Path:
    """Trajectories in the (x1, x2) plane."""
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    for ts in series:
        ax.plot(ts.x1, ts.x2, lw=0.9)
        ax.plot(ts.x1[0], ts.x2[0], "k.", ms=3)
    ax.axhline(0.0, color="gray", lw=0.5, ls="--")
    ax.axvline(0.0, color="gray", lw=0.5, ls="--")
    ax.set_xlabel("$x_1$ [m]")
    ax.set_ylabel("$x_2$ [m/s]")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_state_traces(
    series: Sequence[TimeSeries],
    labels: Sequence[str],
    path: str | Path,
    title: str = "state trajectories",
) -> Path:
    """x1(t) and x2(t) panels, one line per run."""
    fig, axes = plt.subplots(2, 1, figsize=(6.4, 5.4), sharex=True)
    for ts, label in zip(series, labels):
        axes[0].plot(ts.t, ts.x1, lw=0.9, label=label)
        axes[1].plot(ts.t, ts.x2, lw=0.9, label=label)
    axes[0].set_ylabel("$x_1$ [m]")
    axes[1].set_ylabel("$x_2$ [m/s]")
    axes[1].set_xlabel("t [s]")
    axes[0].legend(fontsize=8)
    axes[0].set_title(title)
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_tracking(
    series: Sequence[TimeSeries],
    labels: Sequence[str],
    path: str | Path,
    title: str = "output tracking",
) -> Path:
    """Output versus reference, plus the error-state phase portrait."""
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for ts, label in zip(series, labels):
        axes[0].plot(ts.t, ts.x1, lw=0.9, label=label)
        axes[1].plot(ts.e1, ts.e2, lw=0.9)
    axes[0].plot(series[0].t, series[0].r, "k--", lw=1.2, label="reference")
    axes[0].set_xlabel("t [s]")
    axes[0].set_ylabel("$x_1$ [m]")
    axes[0].legend(fontsize=8)
    axes[0].grid(alpha=0.3)
    axes[1].set_xlabel("$e_1$ [m]")
    axes[1].set_ylabel("$e_2$ [m/s]")
    axes[1].grid(alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_energy_rate(
    e1_values: np.ndarray,
    e2_values: np.ndarray,
    table: np.ndarray,
    path: str | Path,
    title: str = "energy reduction rate",
) -> Path:
    """|Vdot| against e1, against e2, and as a log-scale map."""
    fig = plt.figure(figsize=(9.6, 3.4))
    ax_a = fig.add_subplot(1, 3, 1)
    ax_b = fig.add_subplot(1, 3, 2)
    ax_c = fig.add_subplot(1, 3, 3)

    picks2 = np.unique(np.abs(e2_values))
    picks2 = picks2[np.linspace(len(picks2) // 4, len(picks2) - 1, 3).astype(int)]
    for val in picks2:
        j = int(np.argmin(np.abs(e2_values - val)))
        ax_a.semilogy(e1_values, np.maximum(table[:, j], 1e-300),
                      lw=0.9, label=f"$e_2$={e2_values[j]:g}")
    ax_a.set_xlabel("$e_1$ [m]")
    ax_a.set_ylabel(r"$|\dot V|$")
    ax_a.legend(fontsize=7)

    picks1 = np.unique(np.abs(e1_values))
    picks1 = picks1[np.linspace(len(picks1) // 4, len(picks1) - 1, 3).astype(int)]
    for val in picks1:
        i = int(np.argmin(np.abs(e1_values - val)))
        ax_b.plot(e2_values, table[i, :], lw=0.9, label=f"$e_1$={e1_values[i]:g}")
    ax_b.set_xlabel("$e_2$ [m/s]")
    ax_b.legend(fontsize=7)

    finite = table[np.isfinite(table) & (table > 0)]
    vmax = finite.max() if len(finite) else 1.0
    mesh = ax_c.pcolormesh(
        e2_values, e1_values, np.maximum(table, vmax * 1e-12),
        norm=matplotlib.colors.LogNorm(vmin=vmax * 1e-9, vmax=vmax),
        shading="auto",
    )
    ax_c.set_xlabel("$e_2$ [m/s]")
    ax_c.set_ylabel("$e_1$ [m]")
    fig.colorbar(mesh, ax=ax_c, shrink=0.9)
    fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)
