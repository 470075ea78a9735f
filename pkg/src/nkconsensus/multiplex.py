"""Multiplex social network, flattened group state, and the conflict energy.

The group of M members discusses N decisions; each decision lives on its own
network layer over the same member set. The full opinion state is flattened
member-major: component l (0-based) holds member l // N's opinion on decision
l % N, matching the layout (sigma_1^1 ... sigma_1^N, sigma_2^1, ...).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Multiplex:
    """Per-layer symmetric binary adjacency with zero diagonal."""

    M: int
    N: int
    layers: np.ndarray  # (N, M, M) int8

    def __post_init__(self):
        A = self.layers
        if A.shape != (self.N, self.M, self.M):
            raise ValueError(f"layers must have shape ({self.N}, {self.M}, {self.M})")
        if not np.array_equal(A, A.transpose(0, 2, 1)):
            raise ValueError("every layer adjacency must be symmetric")
        if np.any(A.diagonal(axis1=1, axis2=2) != 0):
            raise ValueError("layer adjacency diagonals must be zero")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("layer adjacency entries must be 0 or 1")


@dataclass(frozen=True)
class Coupling:
    """Interaction parameters: consensus pressure beta_j and payoff certainty beta_prime.

    Only the product beta*J enters the dynamics, so it is carried as a single
    nonnegative number.
    """

    beta_j: float
    beta_prime: float

    def __post_init__(self):
        if self.beta_j < 0 or self.beta_prime < 0:
            raise ValueError(
                f"couplings must be nonnegative, got beta_j={self.beta_j}, "
                f"beta_prime={self.beta_prime}"
            )


@dataclass
class GroupState:
    """Flattened +-1 opinion vector of length M*N (member-major)."""

    s: np.ndarray  # (M*N,) int8
    M: int
    N: int

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.int8)
        if self.s.shape != (self.M * self.N,):
            raise ValueError(f"state must have length M*N={self.M * self.N}")
        if not np.all(np.abs(self.s) == 1):
            raise ValueError("opinions must be exactly +1 or -1")

    def opinions(self) -> np.ndarray:
        """(M, N) view: row k = member k's opinions across decisions."""
        return self.s.reshape(self.M, self.N)

    def copy(self) -> "GroupState":
        return GroupState(self.s.copy(), self.M, self.N)


def random_group_state(M: int, N: int, rng: np.random.Generator) -> GroupState:
    """Uniform random opinion configuration."""
    s = (2 * rng.integers(0, 2, size=M * N) - 1).astype(np.int8)
    return GroupState(s, M, N)


def index_to_member_decision(l: int, M: int, N: int) -> tuple[int, int]:
    """Map a 1-based flat index to 1-based (member, decision).

    Follows the member-major state layout: k = quotient(l-1, N) + 1 and
    j = mod(l-1, N) + 1.
    """
    if not 1 <= l <= M * N:
        raise IndexError(f"flat index must lie in [1, {M * N}], got {l}")
    k, j = divmod(l - 1, N)
    return k + 1, j + 1


def member_decision_to_index(k: int, j: int, M: int, N: int) -> int:
    """Inverse of :func:`index_to_member_decision` (all 1-based)."""
    if not 1 <= k <= M:
        raise IndexError(f"member must lie in [1, {M}], got {k}")
    if not 1 <= j <= N:
        raise IndexError(f"decision must lie in [1, {N}], got {j}")
    return (k - 1) * N + j


def build_complete_multiplex(M: int, N: int) -> Multiplex:
    """All-to-all social ties on every decision layer."""
    if M < 2:
        raise ValueError(f"a social network needs at least 2 members, got M={M}")
    layer = np.ones((M, M), dtype=np.int8) - np.eye(M, dtype=np.int8)
    return Multiplex(M=M, N=N, layers=np.broadcast_to(layer, (N, M, M)).copy())


def layer_conflict(mp: Multiplex, state: GroupState, j: int, J: float) -> float:
    """Disagreement energy -J * sum over layer-j edges of sigma_k * sigma_h."""
    if not 0 <= j < mp.N:
        raise IndexError(f"layer must lie in [0, {mp.N - 1}], got {j}")
    sig = state.opinions()[:, j].astype(np.float64)
    return float(-0.5 * J * (sig @ mp.layers[j] @ sig))


def total_conflict(mp: Multiplex, state: GroupState, J: float) -> float:
    """Total disagreement energy -(J/2) * sum_ij A_ij s_i s_j over the block-diagonal aggregate."""
    sig = state.opinions().T.astype(np.float64)  # (N, M)
    quad = np.einsum("jk,jkh,jh->", sig, mp.layers.astype(np.float64), sig)
    return float(-0.5 * J * quad)


def layers_to_edge_lists(mp: Multiplex) -> list[list[list[int]]]:
    """Per-layer edge lists (0-based member pairs, each unordered pair once)."""
    out = []
    for j in range(mp.N):
        ks, hs = np.nonzero(np.triu(mp.layers[j], k=1))
        out.append([[int(k), int(h)] for k, h in zip(ks, hs)])
    return out


def multiplex_from_edge_lists(M: int, edges: list[list[list[int]]]) -> Multiplex:
    """Build a multiplex from per-layer edge lists (0-based member pairs)."""
    N = len(edges)
    layers = np.zeros((N, M, M), dtype=np.int8)
    for j, layer_edges in enumerate(edges):
        for k, h in layer_edges:
            if not (0 <= k < M and 0 <= h < M) or k == h:
                raise ValueError(f"bad edge ({k}, {h}) on layer {j} for M={M}")
            layers[j, k, h] = 1
            layers[j, h, k] = 1
    return Multiplex(M=M, N=N, layers=layers)
