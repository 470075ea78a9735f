"""Exact treatment of tiny systems: generator matrix, stationary law, balance.

Every group state of n = M*N opinions is enumerated as an integer code
(opinion +1 -> bit 1, flat component 0 = least significant bit). The
transition-rate matrix over all single flips is assembled explicitly, its
stationary distribution solved directly, and both are cross-checked against
the closed-form Boltzmann-like law exp[-beta*E + 2*beta' * sum_k V_k] / Z.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .landscape import CompetenceMatrix, Landscape, bit_weight_matrix
from .multiplex import Coupling, Multiplex

MAX_EXACT_N = 16


@dataclass
class ExactModel:
    """Full transition-rate matrix of a small system plus its ingredients."""

    n: int
    states: np.ndarray       # (2^n, n) int8 in code order
    Q: sp.csr_matrix         # (2^n, 2^n), rows sum to zero
    flip_rates: np.ndarray   # (2^n, n): rate of flipping component l from each state
    L: Landscape = field(repr=False, default=None)
    C: CompetenceMatrix = field(repr=False, default=None)
    mp: Multiplex = field(repr=False, default=None)
    coupling: Coupling = field(repr=False, default=None)


def enumerate_states(n: int) -> np.ndarray:
    """All 2^n opinion vectors in code order (+1 -> bit 1, component 0 = LSB)."""
    codes = np.arange(1 << n, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def _signed_states(mp: Multiplex) -> np.ndarray:
    """(S, M, N) float64 opinion array over all state codes."""
    n = mp.M * mp.N
    return enumerate_states(n).reshape(-1, mp.M, mp.N).astype(np.float64)


def _perceived_all(L: Landscape, C: CompetenceMatrix, sig: np.ndarray) -> np.ndarray:
    """Perceived fitness of every member in every state: (S, M)."""
    bits = ((sig + 1) / 2).astype(np.int64)
    P = bit_weight_matrix(L)
    idx = np.einsum("qb,skb->skq", P, bits)
    vals = L.tables[np.arange(L.N)[None, None, :], idx]
    denom = C.D.sum(axis=1).astype(np.float64)
    V = np.einsum("kq,skq->sk", C.D.astype(np.float64), vals)
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom[None, :] > 0, V / safe[None, :], 0.0)


def flip_rate_table(
    L: Landscape, C: CompetenceMatrix, mp: Multiplex, coupling: Coupling
) -> np.ndarray:
    """Rates of all single flips from all states at once: (2^n, n)."""
    M, N = mp.M, mp.N
    sig = _signed_states(mp)
    A = mp.layers.astype(np.float64)

    fields = np.einsum("jkh,shj->skj", A, sig)
    g = 0.5 * (1.0 - sig * np.tanh(coupling.beta_j * fields))

    bits = ((sig + 1) / 2).astype(np.int64)
    P = bit_weight_matrix(L)
    idx = np.einsum("qb,skb->skq", P, bits)
    qidx = np.arange(N)[None, None, :]
    vals = L.tables[qidx, idx]
    denom = C.D.sum(axis=1).astype(np.float64)
    safe = np.where(denom > 0, denom, 1.0)
    Dw = C.D.astype(np.float64)

    dv = np.empty(g.shape)
    for m in range(N):
        shift = (sig[:, :, m].astype(np.int64))[:, :, None] * P[:, m][None, None, :]
        vals_flip = L.tables[qidx, idx - shift]
        diff = np.einsum("kq,skq->sk", Dw, vals_flip - vals)
        dv[:, :, m] = np.where(denom[None, :] > 0, diff / safe[None, :], 0.0)

    rates = g * np.exp(coupling.beta_prime * dv)
    return rates.reshape(-1, M * N)


def build_generator(
    L: Landscape,
    C: CompetenceMatrix,
    mp: Multiplex,
    coupling: Coupling,
    perturb: tuple[int, int, float] | None = None,
) -> ExactModel:
    """Assemble the 2^n x 2^n transition-rate matrix of the full chain.

    ``perturb=(state_code, component, factor)`` scales one off-diagonal rate;
    it exists so tests can verify that the balance check detects corruption.
    """
    n = mp.M * mp.N
    if n > MAX_EXACT_N:
        raise ValueError(f"exact enumeration refused for n={n} > {MAX_EXACT_N}")
    rates = flip_rate_table(L, C, mp, coupling)
    if perturb is not None:
        i, l, factor = perturb
        rates = rates.copy()
        rates[i, l] *= factor
    S = 1 << n
    rows = np.repeat(np.arange(S, dtype=np.int64), n)
    cols = (np.arange(S, dtype=np.int64)[:, None] ^ (1 << np.arange(n))[None, :]).ravel()
    Q = sp.coo_matrix((rates.ravel(), (rows, cols)), shape=(S, S))
    Q = (Q + sp.diags(-rates.sum(axis=1))).tocsr()
    return ExactModel(
        n=n, states=enumerate_states(n), Q=Q, flip_rates=rates,
        L=L, C=C, mp=mp, coupling=coupling,
    )


def stationary_distribution(model: ExactModel, residual_tol: float = 1e-10) -> np.ndarray:
    """Solve pi Q = 0 with sum(pi) = 1 by direct sparse LU.

    One equation of the transposed system is replaced by the normalization
    constraint. Raises if the defining residual ||pi Q||_inf exceeds
    ``residual_tol``.
    """
    S = model.Q.shape[0]
    A = model.Q.T.tolil()
    A[S - 1, :] = 1.0
    b = np.zeros(S)
    b[S - 1] = 1.0
    pi = spla.spsolve(A.tocsc(), b)
    if np.min(pi) < -1e-9:
        raise RuntimeError(f"stationary solve produced negative mass {np.min(pi):.3e}")
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    residual = float(np.max(np.abs(pi @ model.Q)))
    if residual > residual_tol:
        raise RuntimeError(
            f"stationary solve failed: ||pi Q||_inf = {residual:.3e} > {residual_tol:.1e}"
        )
    return pi


def analytic_stationary(
    L: Landscape, C: CompetenceMatrix, mp: Multiplex, coupling: Coupling
) -> np.ndarray:
    """Closed-form stationary law exp[-beta*E(s) + 2*beta' * sum_k V_k] / Z.

    Each flip changes exactly one member's perceived fitness, which makes
    this product form the unique distribution balancing every flip pair.
    """
    n = mp.M * mp.N
    if n > MAX_EXACT_N:
        raise ValueError(f"exact enumeration refused for n={n} > {MAX_EXACT_N}")
    sig = _signed_states(mp)
    A = mp.layers.astype(np.float64)
    half_quad = 0.5 * np.einsum("jkh,skj,shj->s", A, sig, sig)
    V = _perceived_all(L, C, sig)
    expo = coupling.beta_j * half_quad + 2.0 * coupling.beta_prime * V.sum(axis=1)
    expo -= expo.max()
    pi = np.exp(expo)
    return pi / pi.sum()


def check_detailed_balance(model: ExactModel, tiny: float = 1e-300) -> float:
    """Largest relative imbalance of probability flow over all flip pairs.

    Uses the closed-form stationary law, so corrupted rates in the generator
    show up directly.
    """
    pi = analytic_stationary(model.L, model.C, model.mp, model.coupling)
    n = model.n
    codes = np.arange(1 << n, dtype=np.int64)
    worst = 0.0
    for l in range(n):
        low = codes[(codes >> l) & 1 == 0]
        high = low | (1 << l)
        f_forward = model.flip_rates[low, l] * pi[low]
        f_back = model.flip_rates[high, l] * pi[high]
        rel = np.abs(f_forward - f_back) / np.maximum(f_forward, tiny)
        worst = max(worst, float(rel.max()))
    return worst


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance between two distributions on the same codes."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def write_stationary_csv(pi: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "probability"])
        for code, prob in enumerate(pi):
            writer.writerow([code, f"{prob:.9g}"])
