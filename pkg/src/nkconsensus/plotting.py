"""Render report figures next to the delimited output files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ObservableCurve

# keep PNG output byte-identical across runs
_PNG_METADATA = {"Software": None}


def save_curves_figure(curves: dict[str, ObservableCurve], path: str | Path) -> None:
    """Time evolution of normalized fitness and consensus with error bands."""
    fit, cons = curves["fitness_norm"], curves["consensus"]
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for ax, curve, label, color in (
        (axes[0], fit, r"$\langle V \rangle / V_{max}$", "tab:blue"),
        (axes[1], cons, r"$\langle C \rangle$", "tab:red"),
    ):
        ax.plot(curve.grid, curve.mean, color=color, lw=1.5)
        ax.fill_between(
            curve.grid,
            curve.mean - curve.stderr,
            curve.mean + curve.stderr,
            color=color,
            alpha=0.25,
            lw=0,
        )
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[0].set_title(f"ensemble of {fit.count} realizations")
    axes[1].set_xlabel("time")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)


def save_sweep_figure(sweep_result, path: str | Path) -> None:
    """Steady-state fitness and consensus against the swept parameter."""
    rows = sweep_result.rows
    x = np.array([row["value"] for row in rows])
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for ax, key, label, color in (
        (axes[0], "fitness", r"$\langle V_\infty \rangle / V_{max}$", "tab:blue"),
        (axes[1], "consensus", r"$\langle C_\infty \rangle$", "tab:red"),
    ):
        y = np.array([row[f"{key}_steady"] for row in rows])
        err = np.array([row[f"{key}_stderr"] for row in rows])
        ax.errorbar(x, y, yerr=err, marker="o", ms=4, capsize=3, color=color, lw=1.2)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[1].set_xlabel(sweep_result.axis)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)


def save_meanfield_figure(table: list[tuple[float, float]], path: str | Path) -> None:
    """Stable magnetization branch against the scaled coupling."""
    xs = np.array([row[0] for row in table])
    ms = np.array([row[1] for row in table])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ms, color="tab:green", lw=1.5)
    ax.axvline(1.0, color="gray", ls="--", lw=1, label="consensus threshold")
    ax.set_xlabel(r"$M \beta J$")
    ax.set_ylabel(r"stable $\langle \sigma \rangle$")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
