"""Opinion-flip transition rates and the exact event-driven simulation.

Each opinion flips at a rate that couples two forces: a Glauber factor that
favours agreement with layer neighbours, and an exponential payoff factor
that accelerates flips improving the member's own perceived fitness. The
chain is sampled exactly: exponential waiting times at the total rate,
flip index drawn proportionally to the individual rates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels, metrics
from .landscape import CompetenceMatrix, Landscape, bit_weight_matrix
from .multiplex import Coupling, GroupState, Multiplex


@dataclass
class RateVector:
    """All single-flip rates of a state plus their sum."""

    w: np.ndarray
    w_T: float


@dataclass
class TrajectoryRecord:
    """Observables of one stochastic realization on a fixed output grid."""

    grid: np.ndarray
    fitness: np.ndarray            # raw group fitness at each grid time
    consensus: np.ndarray
    seed: int
    n_events: int
    params: dict
    v_max: float = math.nan        # filled by the ensemble runner
    states: np.ndarray | None = field(default=None, repr=False)


def glauber_factor(state: GroupState, l: int, beta_j: float, mp: Multiplex) -> float:
    """Consensus-seeking part of the flip rate: (1/2)[1 - s_l tanh(beta_j * field)].

    The field is the sum of layer-neighbour opinions of spin l (0-based flat
    index). Lies strictly inside (0, 1) for finite beta_j.
    """
    k, j = divmod(int(l), state.N)
    sig_j = state.opinions()[:, j].astype(np.float64)
    h = float(mp.layers[j, k] @ sig_j)
    return 0.5 * (1.0 - state.s[l] * math.tanh(beta_j * h))


def payoff_delta(state: GroupState, l: int, L: Landscape, C: CompetenceMatrix) -> float:
    """Perceived-fitness change for the owning member if opinion l flipped.

    Only contribution tables that read the flipped decision can change, so the
    sum runs over those alone; a member with no knowledge sees 0.
    """
    k, j = divmod(int(l), state.N)
    row = C.D[k]
    known = float(row.sum())
    if known == 0.0:
        return 0.0
    P = bit_weight_matrix(L)
    bits = ((state.opinions()[k] + 1) // 2).astype(np.int64)
    idx = P @ bits
    sl = int(state.s[l])
    acc = 0.0
    for q in np.nonzero(P[:, j])[0]:
        if row[q]:
            acc += L.tables[q, idx[q] - sl * P[q, j]] - L.tables[q, idx[q]]
    return acc / known


def transition_rate(
    state: GroupState,
    l: int,
    coupling: Coupling,
    mp: Multiplex,
    L: Landscape,
    C: CompetenceMatrix,
) -> float:
    """Full flip rate: Glauber factor times exp(beta_prime * payoff gain)."""
    return glauber_factor(state, l, coupling.beta_j, mp) * math.exp(
        coupling.beta_prime * payoff_delta(state, l, L, C)
    )


def compute_rates(
    state: GroupState,
    coupling: Coupling,
    mp: Multiplex,
    L: Landscape,
    C: CompetenceMatrix,
) -> RateVector:
    """From-scratch rate vector over all M*N possible flips."""
    n = state.M * state.N
    w = np.array([transition_rate(state, l, coupling, mp, L, C) for l in range(n)])
    return RateVector(w=w, w_T=float(w.sum()))


def gillespie_step(rates: RateVector, rng: np.random.Generator) -> tuple[int, float]:
    """Draw the next event: waiting time ~ Exp(w_T), flip index ~ w_l / w_T.

    The waiting time uses a uniform draw on (0, 1]; the index comes from
    inverting the cumulative rate distribution.
    """
    if rates.w_T <= 0.0:
        raise RuntimeError(f"total rate must be positive, got {rates.w_T}")
    r = 1.0 - rng.random()
    dt = -math.log(r) / rates.w_T
    cum = np.cumsum(rates.w)
    l = int(np.searchsorted(cum, rng.random() * rates.w_T, side="right"))
    return min(l, len(rates.w) - 1), dt


def trajectory_streams(seed: int) -> tuple[int, np.random.Generator]:
    """Derive the two named substreams of a trajectory seed.

    Child 0 of ``SeedSequence(seed)`` seeds the event loop (a Mersenne
    Twister inside the compiled kernel, via its first uint32 word); child 1
    seeds the PCG64 generator used for measurement-time tie coins.
    """
    dyn_ss, measure_ss = np.random.SeedSequence(seed).spawn(2)
    kernel_seed = int(dyn_ss.generate_state(1, np.uint32)[0])
    return kernel_seed, np.random.default_rng(measure_ss)


def simulate_trajectory(
    L: Landscape,
    C: CompetenceMatrix,
    mp: Multiplex,
    coupling: Coupling,
    t_end: float,
    sample_grid: np.ndarray,
    seed: int,
    max_events: int = 50_000_000,
    keep_states: bool = False,
) -> TrajectoryRecord:
    """Run one realization from a uniform random initial state.

    Observables are piecewise constant between events; each grid point reads
    the state in force at that time. Deterministic given the seed (see
    :func:`trajectory_streams` for the substream scheme).
    """
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    grid = np.asarray(sample_grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("sample grid must be a nonempty 1-d array of times")
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > t_end:
        raise ValueError("sample grid must be sorted and lie within [0, t_end]")

    packed = _kernels.pack_system(L, C, mp, coupling)
    kernel_seed, measure_rng = trajectory_streams(seed)
    snaps, n_events, _, _ = _kernels.simulate_grid(packed, grid, kernel_seed, max_events)

    fit = metrics.group_fitness_curve(snaps, L, mp.M, mp.N, measure_rng)
    cons = metrics.consensus_curve(snaps, mp.M, mp.N)
    params = {
        "M": mp.M,
        "N": mp.N,
        "K": L.K,
        "betaJ": coupling.beta_j,
        "betaPrime": coupling.beta_prime,
        "t_end": float(t_end),
        "landscape_seed": L.seed,
        "competence_seed": C.seed,
    }
    return TrajectoryRecord(
        grid=grid,
        fitness=fit,
        consensus=cons,
        seed=int(seed),
        n_events=int(n_events),
        params=params,
        states=snaps if keep_states else None,
    )


def final_rates_after(
    L: Landscape,
    C: CompetenceMatrix,
    mp: Multiplex,
    coupling: Coupling,
    n_events: int,
    seed: int,
) -> tuple[GroupState, RateVector]:
    """State and incrementally maintained rates after exactly n_events flips.

    Exposed so the incremental bookkeeping can be checked against
    :func:`compute_rates` from scratch.
    """
    packed = _kernels.pack_system(L, C, mp, coupling)
    kernel_seed, _ = trajectory_streams(seed)
    s, w = _kernels.simulate_n_events(packed, n_events, kernel_seed)
    state = GroupState(s, mp.M, mp.N)
    return state, RateVector(w=w, w_T=float(w.sum()))


def occupancy_trajectory(
    L: Landscape,
    C: CompetenceMatrix,
    mp: Multiplex,
    coupling: Coupling,
    n_events: int,
    seed: int,
) -> np.ndarray:
    """Normalized time spent in each of the 2^(M*N) states over a long run.

    State codes follow the enumeration convention of the exact solver
    (+1 -> bit 1, component 0 = least significant bit). Guarded to M*N <= 16.
    """
    packed = _kernels.pack_system(L, C, mp, coupling)
    kernel_seed, _ = trajectory_streams(seed)
    occ = _kernels.simulate_occupancy(packed, n_events, kernel_seed)
    return occ / occ.sum()


def write_trajectories_csv(records: Sequence[TrajectoryRecord], path: str | Path) -> None:
    """Stream records as rows (time, fitness, consensus, realization_id)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "fitness", "consensus", "realization_id"])
        for rid, rec in enumerate(records):
            for t, v, c in zip(rec.grid, rec.fitness, rec.consensus):
                writer.writerow([f"{t:.9g}", f"{v:.9g}", f"{c:.9g}", rid])
