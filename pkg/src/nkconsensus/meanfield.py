"""Mean-field consensus theory on complete graphs.

For a large all-to-all group the average opinion m obeys
dm/dt = -m + tanh(x m) with x = M * beta * J. Below x = 1 only the
disordered solution m = 0 exists; above it a symmetric pair of ordered
solutions appears and m = 0 loses stability, so consensus sets in at
(beta J)_c = 1/M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MeanFieldSolution:
    """Fixed points of m = tanh(x m) with their stability labels."""

    coupling: float
    fixed_points: tuple[float, ...]
    stability: tuple[str, ...]


def critical_coupling(M: int) -> float:
    """Consensus threshold of the all-to-all group: (beta J)_c = 1 / M."""
    if M < 1:
        raise ValueError(f"group size must be positive, got {M}")
    return 1.0 / M


def _stability(x: float, m: float) -> str:
    slope = x / math.cosh(x * m) ** 2
    if abs(slope - 1.0) < 1e-12:
        return "marginal"
    return "stable" if slope < 1.0 else "unstable"


def magnetization_fixed_points(x: float, tol: float = 1e-12) -> MeanFieldSolution:
    """All solutions of m = tanh(x m) for coupling x >= 0.

    The nonzero root (present only for x > 1) is bracketed on [1e-6, 1] and
    bisected until |m - tanh(x m)| < tol.
    """
    if x < 0:
        raise ValueError(f"coupling must be nonnegative, got {x}")
    if x <= 1.0:
        return MeanFieldSolution(
            coupling=x, fixed_points=(0.0,), stability=(_stability(x, 0.0),)
        )
    lo, hi = 1e-6, 1.0
    # g(m) = m - tanh(x m) is negative at lo and positive at hi for x > 1
    while True:
        mid = 0.5 * (lo + hi)
        gap = mid - math.tanh(x * mid)
        if abs(gap) < tol or hi - lo < 1e-16:
            break
        if gap < 0:
            lo = mid
        else:
            hi = mid
    m_star = mid
    return MeanFieldSolution(
        coupling=x,
        fixed_points=(0.0, m_star, -m_star),
        stability=("unstable", _stability(x, m_star), _stability(x, -m_star)),
    )


def integrate_mean_field(
    m0: float, x: float, t_end: float, dt: float = 0.01
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate dm/dt = -m + tanh(x m) with fixed-step classical RK4.

    Returns (times, magnetization). The step must stay below the linear
    stability bound 1 / (1 + x).
    """
    if abs(m0) > 1:
        raise ValueError(f"initial magnetization must lie in [-1, 1], got {m0}")
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if dt <= 0 or dt > 1.0 / (1.0 + x):
        raise ValueError(f"step dt={dt} unstable for coupling x={x}; need 0 < dt <= {1.0 / (1.0 + x):.4g}")

    def f(m: float) -> float:
        return -m + math.tanh(x * m)

    steps = int(math.ceil(t_end / dt))
    times = np.empty(steps + 1)
    ms = np.empty(steps + 1)
    times[0], ms[0] = 0.0, m0
    m = m0
    for i in range(1, steps + 1):
        h = min(dt, t_end - times[i - 1])
        k1 = f(m)
        k2 = f(m + 0.5 * h * k1)
        k3 = f(m + 0.5 * h * k2)
        k4 = f(m + h * k3)
        m = m + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        times[i] = times[i - 1] + h
        ms[i] = m
    return times, ms


def magnetization_table(xs: np.ndarray) -> list[tuple[float, float]]:
    """(x, nonnegative stable magnetization) pairs for overlaying on sweeps."""
    out = []
    for x in np.asarray(xs, dtype=np.float64):
        sol = magnetization_fixed_points(float(x))
        m = max(sol.fixed_points)
        out.append((float(x), m))
    return out
