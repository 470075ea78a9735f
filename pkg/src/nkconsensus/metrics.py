"""Group-level observables: majority decisions, consensus, ensemble curves.

The group decision on each layer is the majority opinion, with exact ties
settled by a fair coin. Consensus is the mean squared layer magnetization:
1 at full agreement, about 1/M for independent uniform opinions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .landscape import Landscape, fitness_batch
from .multiplex import GroupState


@dataclass
class ObservableCurve:
    """Ensemble mean and standard error of one observable on a time grid."""

    grid: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    count: int


class SteadyState(NamedTuple):
    value: float
    converged: bool
    t_reached: float


def majority_decision(state: GroupState, rng: np.random.Generator) -> np.ndarray:
    """Per-layer majority opinion; exact ties drawn uniformly from {-1, +1}."""
    sums = state.opinions().sum(axis=0)
    d = np.sign(sums).astype(np.int8)
    ties = d == 0
    if ties.any():
        d[ties] = (2 * rng.integers(0, 2, size=int(ties.sum())) - 1).astype(np.int8)
    return d


def group_fitness(state: GroupState, L: Landscape, rng: np.random.Generator) -> float:
    """Fitness of the majority decision vector."""
    d = majority_decision(state, rng)
    bits = ((d + 1) // 2)[None, :]
    return float(fitness_batch(L, bits)[0])


def consensus(state: GroupState) -> float:
    """Mean over layers of the squared average opinion, in [0, 1]."""
    means = state.opinions().mean(axis=0)
    return float((means**2).mean())


def consensus_curve(snapshots: np.ndarray, M: int, N: int) -> np.ndarray:
    """Consensus at every snapshot row of a (G, M*N) state array."""
    means = snapshots.reshape(-1, M, N).mean(axis=1)
    return (means**2).mean(axis=1)


def group_fitness_curve(
    snapshots: np.ndarray, L: Landscape, M: int, N: int, rng: np.random.Generator
) -> np.ndarray:
    """Group fitness at every snapshot row; tie coins drawn in time order."""
    sums = snapshots.reshape(-1, M, N).sum(axis=1)
    d = np.sign(sums).astype(np.int8)
    ties = d == 0
    n_ties = int(ties.sum())
    if n_ties:
        d[ties] = (2 * rng.integers(0, 2, size=n_ties) - 1).astype(np.int8)
    return fitness_batch(L, (d + 1) // 2)


def ensemble_average(records: Sequence) -> dict[str, ObservableCurve]:
    """Pointwise mean and standard error across realizations.

    Returns the consensus curve and the fitness curve normalized by each
    realization's own landscape optimum (``record.v_max``).
    """
    if not records:
        raise ValueError("need at least one trajectory record")
    grid = records[0].grid
    for rec in records[1:]:
        if not np.array_equal(rec.grid, grid):
            raise ValueError("all records must share one sample grid")
    v_max = np.array([rec.v_max for rec in records], dtype=np.float64)
    if np.any(~np.isfinite(v_max)) or np.any(v_max <= 0):
        raise ValueError("every record needs a positive v_max for normalization")
    fit = np.stack([rec.fitness for rec in records]) / v_max[:, None]
    cons = np.stack([rec.consensus for rec in records])
    count = len(records)

    def curve(rows: np.ndarray) -> ObservableCurve:
        mean = rows.mean(axis=0)
        if count > 1:
            stderr = rows.std(axis=0, ddof=1) / np.sqrt(count)
        else:
            stderr = np.zeros_like(mean)
        return ObservableCurve(grid=grid, mean=mean, stderr=stderr, count=count)

    return {"fitness_norm": curve(fit), "consensus": curve(cons)}


def steady_state_value(curve: ObservableCurve, T: float, tol: float) -> SteadyState:
    """Detect a steady value from consecutive window time-averages.

    Splits the grid into consecutive windows of length T and reports the
    first window whose average differs from its predecessor by less than
    tol. Without such a pair the last full window's average is returned with
    converged=False.
    """
    if T <= 0 or tol <= 0:
        raise ValueError(f"window length and tolerance must be positive, got T={T}, tol={tol}")
    grid = curve.grid
    t0 = grid[0]
    span = grid[-1] - t0
    if span < 2 * T:
        raise ValueError(f"curve spans {span:.6g} < 2T = {2 * T:.6g}; cannot compare windows")
    n_windows = int(span // T)
    averages = []
    for i in range(n_windows):
        lo, hi = t0 + i * T, t0 + (i + 1) * T
        mask = (grid >= lo) & (grid < hi) if i < n_windows - 1 else (grid >= lo) & (grid <= hi)
        if not mask.any():
            raise ValueError(f"window [{lo:.6g}, {hi:.6g}) holds no grid points")
        averages.append(float(curve.mean[mask].mean()))
    for i in range(1, n_windows):
        if abs(averages[i] - averages[i - 1]) < tol:
            return SteadyState(averages[i], True, float(t0 + (i + 1) * T))
    return SteadyState(averages[-1], False, float(t0 + n_windows * T))


def tail_window_average(grid: np.ndarray, values: np.ndarray, T: float) -> float:
    """Time-average of the final window (t_end - T, t_end]."""
    mask = grid > grid[-1] - T
    return float(values[mask].mean())


def write_curves_csv(curves: dict[str, ObservableCurve], path: str | Path) -> None:
    fit, cons = curves["fitness_norm"], curves["consensus"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["t", "mean_fitness_norm", "stderr_fitness",
             "mean_consensus", "stderr_consensus", "n_realizations"]
        )
        for i, t in enumerate(fit.grid):
            writer.writerow(
                [f"{t:.9g}", f"{fit.mean[i]:.9g}", f"{fit.stderr[i]:.9g}",
                 f"{cons.mean[i]:.9g}", f"{cons.stderr[i]:.9g}", fit.count]
            )
