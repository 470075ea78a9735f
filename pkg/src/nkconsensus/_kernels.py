"""Compiled event loop for the opinion-flip Markov chain.

The public rate functions in :mod:`nkconsensus.dynamics` are the readable
reference; these kernels keep the same quantities incrementally so that long
trajectories stay cheap. After a flip of member k's opinion on decision j,
only three groups of rates can change:

* the flipped spin itself and its layer-j neighbours (social field changed);
* member k's payoff gains for every decision sharing a contribution table
  with j (the co-dependency closure of j, precomputed per landscape).

Everything is driven by a single seeded generator, so a trajectory is a pure
function of its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .landscape import CompetenceMatrix, Landscape, bit_weight_matrix
from .multiplex import Coupling, Multiplex


@dataclass(frozen=True)
class PackedSystem:
    """Flat array view of (landscape, competence, network, coupling) for the kernels."""

    M: int
    N: int
    A: np.ndarray          # (N, M, M) int8 adjacency per layer
    tab_flat: np.ndarray   # concatenated contribution tables, float64
    q_off: np.ndarray      # (N+1,) int64 offsets into tab_flat
    P: np.ndarray          # (N, N) int64 bit weights, P[q, b] = weight of decision b in table q
    touch_off: np.ndarray  # CSR over decisions: contributions whose table involves decision b
    touch_q: np.ndarray
    aff_off: np.ndarray    # CSR over decisions: co-dependency closure (decisions whose
    aff_m: np.ndarray      # payoff gain changes when decision b flips)
    D: np.ndarray          # (M, N) int8 knowledge mask
    denom: np.ndarray      # (M,) float64 known-contribution counts
    beta_j: float
    beta_prime: float

    @property
    def n(self) -> int:
        return self.M * self.N


def pack_system(
    L: Landscape, C: CompetenceMatrix, mp: Multiplex, coupling: Coupling
) -> PackedSystem:
    if C.N != L.N or mp.N != L.N or C.M != mp.M:
        raise ValueError(
            f"inconsistent sizes: landscape N={L.N}, competence {C.M}x{C.N}, "
            f"network {mp.M}x{mp.N}"
        )
    N = L.N
    P = bit_weight_matrix(L)
    table_len = L.tables.shape[1]
    tab_flat = np.ascontiguousarray(L.tables.reshape(-1), dtype=np.float64)
    q_off = np.arange(N + 1, dtype=np.int64) * table_len

    involved = P != 0  # involved[q, b]: table q reads decision b
    touch_lists = [np.nonzero(involved[:, b])[0] for b in range(N)]
    aff_lists = []
    for b in range(N):
        # decisions m whose payoff gain can change when b flips: any m that
        # shares at least one contribution table with b
        aff = np.nonzero(involved[touch_lists[b]].any(axis=0))[0]
        aff_lists.append(aff)

    def csr(lists):
        off = np.zeros(N + 1, dtype=np.int64)
        off[1:] = np.cumsum([len(x) for x in lists])
        flat = np.concatenate(lists) if N else np.empty(0, dtype=np.int64)
        return off, flat.astype(np.int32)

    touch_off, touch_q = csr(touch_lists)
    aff_off, aff_m = csr(aff_lists)

    return PackedSystem(
        M=mp.M,
        N=N,
        A=np.ascontiguousarray(mp.layers, dtype=np.int8),
        tab_flat=tab_flat,
        q_off=q_off,
        P=P,
        touch_off=touch_off,
        touch_q=touch_q,
        aff_off=aff_off,
        aff_m=aff_m,
        D=np.ascontiguousarray(C.D, dtype=np.int8),
        denom=C.D.sum(axis=1).astype(np.float64),
        beta_j=float(coupling.beta_j),
        beta_prime=float(coupling.beta_prime),
    )


@njit(cache=True)
def _payoff_gain(k, m, s, idx, D, denom, tab_flat, q_off, P, touch_off, touch_q, N):
    """Perceived-fitness change for member k if it flipped decision m."""
    dk = denom[k]
    if dk == 0.0:
        return 0.0
    sl = s[k * N + m]
    acc = 0.0
    for t in range(touch_off[m], touch_off[m + 1]):
        q = touch_q[t]
        if D[k, q]:
            base = q_off[q] + idx[k, q]
            acc += tab_flat[base - sl * P[q, m]] - tab_flat[base]
    return acc / dk


@njit(cache=True)
def _init_structs(
    s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, D, denom,
    beta_j, beta_prime, idx, field, dv, g, w,
):
    for k in range(M):
        for q in range(N):
            v = 0
            for b in range(N):
                if P[q, b] != 0 and s[k * N + b] > 0:
                    v += P[q, b]
            idx[k, q] = v
    for k in range(M):
        for j in range(N):
            f = 0
            for h in range(M):
                if A[j, k, h] != 0:
                    f += s[h * N + j]
            field[k * N + j] = f
    for l in range(M * N):
        k = l // N
        m = l % N
        dv[l] = _payoff_gain(
            k, m, s, idx, D, denom, tab_flat, q_off, P, touch_off, touch_q, N
        )
        g[l] = 0.5 * (1.0 - s[l] * np.tanh(beta_j * field[l]))
        w[l] = g[l] * np.exp(beta_prime * dv[l])


@njit(cache=True)
def _apply_flip(
    l, s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m,
    D, denom, beta_j, beta_prime, idx, field, dv, g, w,
):
    k = l // N
    j = l % N
    new = -s[l]
    s[l] = new
    dfield = 2 * new
    for h in range(M):
        if A[j, h, k] != 0:
            lh = h * N + j
            field[lh] += dfield
            g[lh] = 0.5 * (1.0 - s[lh] * np.tanh(beta_j * field[lh]))
            w[lh] = g[lh] * np.exp(beta_prime * dv[lh])
    # own social field excludes itself, but the factor flips with the spin
    g[l] = 0.5 * (1.0 - new * np.tanh(beta_j * field[l]))
    for t in range(touch_off[j], touch_off[j + 1]):
        q = touch_q[t]
        idx[k, q] += new * P[q, j]
    for t in range(aff_off[j], aff_off[j + 1]):
        m = aff_m[t]
        lm = k * N + m
        dv[lm] = _payoff_gain(
            k, m, s, idx, D, denom, tab_flat, q_off, P, touch_off, touch_q, N
        )
        w[lm] = g[lm] * np.exp(beta_prime * dv[lm])


@njit(cache=True)
def _draw_waiting_time(w_T):
    # uniform on (0, 1]: the exponential draw must never see log(0)
    r = 1.0 - np.random.random()
    return -np.log(r) / w_T


@njit(cache=True)
def _draw_flip_index(w, w_T, n):
    target = np.random.random() * w_T
    acc = 0.0
    for i in range(n):
        acc += w[i]
        if target < acc:
            return i
    return n - 1


@njit(cache=True)
def _simulate_grid(
    M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m, D, denom,
    beta_j, beta_prime, grid, seed, max_events,
):
    """Run the chain from a uniform random state, snapshotting at grid times.

    Returns (snapshots, n_events, final_state, final_rates). A grid point
    records the state in force at that time: the last state entered at or
    before it.
    """
    np.random.seed(seed)
    n = M * N
    s = np.empty(n, np.int8)
    for i in range(n):
        s[i] = 1 if np.random.random() < 0.5 else -1
    idx = np.zeros((M, N), np.int64)
    field = np.zeros(n, np.int64)
    dv = np.zeros(n, np.float64)
    g = np.zeros(n, np.float64)
    w = np.zeros(n, np.float64)
    _init_structs(
        s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, D, denom,
        beta_j, beta_prime, idx, field, dv, g, w,
    )
    G = grid.shape[0]
    snaps = np.empty((G, n), np.int8)
    gp = 0
    t = 0.0
    events = 0
    while gp < G:
        w_T = 0.0
        for i in range(n):
            w_T += w[i]
        if w_T <= 0.0:
            raise RuntimeError("total flip rate vanished; the chain cannot advance")
        t_next = t + _draw_waiting_time(w_T)
        while gp < G and grid[gp] < t_next:
            for i in range(n):
                snaps[gp, i] = s[i]
            gp += 1
        if gp >= G:
            break
        if events >= max_events:
            raise RuntimeError("event budget exhausted before the end of the sample grid")
        l = _draw_flip_index(w, w_T, n)
        _apply_flip(
            l, s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m,
            D, denom, beta_j, beta_prime, idx, field, dv, g, w,
        )
        t = t_next
        events += 1
    return snaps, events, s, w


@njit(cache=True)
def _simulate_occupancy(
    M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m, D, denom,
    beta_j, beta_prime, n_events, seed,
):
    """Accumulate time spent in each state over a fixed number of events.

    State codes use opinion +1 -> bit 1 with component 0 as the least
    significant bit; requires M*N small enough to enumerate (guarded by the
    caller). Returns unnormalized dwell times.
    """
    np.random.seed(seed)
    n = M * N
    s = np.empty(n, np.int8)
    for i in range(n):
        s[i] = 1 if np.random.random() < 0.5 else -1
    idx = np.zeros((M, N), np.int64)
    field = np.zeros(n, np.int64)
    dv = np.zeros(n, np.float64)
    g = np.zeros(n, np.float64)
    w = np.zeros(n, np.float64)
    _init_structs(
        s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, D, denom,
        beta_j, beta_prime, idx, field, dv, g, w,
    )
    occ = np.zeros(1 << n, np.float64)
    code = 0
    for i in range(n):
        if s[i] > 0:
            code |= 1 << i
    for _ in range(n_events):
        w_T = 0.0
        for i in range(n):
            w_T += w[i]
        if w_T <= 0.0:
            raise RuntimeError("total flip rate vanished; the chain cannot advance")
        occ[code] += _draw_waiting_time(w_T)
        l = _draw_flip_index(w, w_T, n)
        _apply_flip(
            l, s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m,
            D, denom, beta_j, beta_prime, idx, field, dv, g, w,
        )
        code ^= 1 << l
    return occ


@njit(cache=True)
def _simulate_n_events(
    M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m, D, denom,
    beta_j, beta_prime, n_events, seed,
):
    """Run exactly n_events flips; returns (final_state, final_rates)."""
    np.random.seed(seed)
    n = M * N
    s = np.empty(n, np.int8)
    for i in range(n):
        s[i] = 1 if np.random.random() < 0.5 else -1
    idx = np.zeros((M, N), np.int64)
    field = np.zeros(n, np.int64)
    dv = np.zeros(n, np.float64)
    g = np.zeros(n, np.float64)
    w = np.zeros(n, np.float64)
    _init_structs(
        s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, D, denom,
        beta_j, beta_prime, idx, field, dv, g, w,
    )
    for _ in range(n_events):
        w_T = 0.0
        for i in range(n):
            w_T += w[i]
        if w_T <= 0.0:
            raise RuntimeError("total flip rate vanished; the chain cannot advance")
        _draw_waiting_time(w_T)
        l = _draw_flip_index(w, w_T, n)
        _apply_flip(
            l, s, M, N, A, tab_flat, q_off, P, touch_off, touch_q, aff_off, aff_m,
            D, denom, beta_j, beta_prime, idx, field, dv, g, w,
        )
    return s, w


def simulate_n_events(packed: PackedSystem, n_events: int, seed: int):
    return _simulate_n_events(
        packed.M, packed.N, packed.A, packed.tab_flat, packed.q_off, packed.P, packed.touch_off,
        packed.touch_q, packed.aff_off, packed.aff_m, packed.D, packed.denom,
        packed.beta_j, packed.beta_prime, int(n_events), int(seed),
    )


def simulate_grid(packed: PackedSystem, grid: np.ndarray, seed: int, max_events: int):
    return _simulate_grid(
        packed.M, packed.N, packed.A, packed.tab_flat, packed.q_off, packed.P, packed.touch_off,
        packed.touch_q, packed.aff_off, packed.aff_m, packed.D, packed.denom,
        packed.beta_j, packed.beta_prime,
        np.ascontiguousarray(grid, dtype=np.float64), int(seed), int(max_events),
    )


def simulate_occupancy(packed: PackedSystem, n_events: int, seed: int) -> np.ndarray:
    if packed.n > 16:
        raise ValueError(f"occupancy enumeration refused for n={packed.n} > 16")
    return _simulate_occupancy(
        packed.M, packed.N, packed.A, packed.tab_flat, packed.q_off, packed.P, packed.touch_off,
        packed.touch_q, packed.aff_off, packed.aff_m, packed.D, packed.denom,
        packed.beta_j, packed.beta_prime, int(n_events), int(seed),
    )
