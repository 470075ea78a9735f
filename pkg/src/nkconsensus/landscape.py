"""NK fitness landscapes, knowledge masks, and true/perceived fitness evaluation.

A landscape assigns each of the N binary decisions a contribution table whose
value depends on the decision itself and on K other coupled decisions. Group
fitness is the average contribution; an individual member only averages the
contributions it actually knows (its row of the competence matrix).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Exhaustive search over 2^N decision vectors gets refused above this size.
MAX_ENUMERATION_N = 24


@dataclass(frozen=True)
class Landscape:
    """Random contribution tables over N coupled binary decisions.

    ``deps[j]`` holds the K decisions (0-based, all distinct, never j itself)
    that decision j's contribution depends on, in sampled order. ``tables[j]``
    has 2**(K+1) entries indexed by the bit pattern of (d_j, deps in stored
    order) with +1 mapped to bit 1, -1 to bit 0, and d_j as the most
    significant bit.
    """

    N: int
    K: int
    deps: np.ndarray    # (N, K) int32
    tables: np.ndarray  # (N, 2**(K+1)) float64
    seed: int

    @property
    def n_decisions(self) -> int:
        return self.N


@dataclass(frozen=True)
class CompetenceMatrix:
    """Binary knowledge mask: D[k, j] = 1 iff member k knows contribution j."""

    M: int
    N: int
    D: np.ndarray  # (M, N) int8
    p: float
    seed: int


def generate_landscape(N: int, K: int, seed: int) -> Landscape:
    """Draw a random landscape: dependency sets without replacement, uniform tables.

    Fully determined by (N, K, seed).
    """
    if N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if not 0 <= K <= N - 1:
        raise ValueError(f"K must lie in [0, N-1]={N - 1}, got {K}")
    rng = np.random.default_rng(seed)
    deps = np.empty((N, K), dtype=np.int32)
    others = np.arange(N, dtype=np.int32)
    for j in range(N):
        pool = np.delete(others, j)
        deps[j] = rng.choice(pool, size=K, replace=False)
    tables = rng.random((N, 2 ** (K + 1)))
    return Landscape(N=N, K=K, deps=deps, tables=tables, seed=int(seed))


def generate_competence(M: int, N: int, p: float, seed: int) -> CompetenceMatrix:
    """Draw an M x N knowledge mask with i.i.d. Bernoulli(p) entries."""
    if M < 1 or N < 1:
        raise ValueError(f"M and N must be positive, got M={M}, N={N}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"knowledge density p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    D = (rng.random((M, N)) < p).astype(np.int8)
    return CompetenceMatrix(M=M, N=N, D=D, p=float(p), seed=int(seed))


def validate_decisions(L: Landscape, d: np.ndarray) -> np.ndarray:
    d = np.asarray(d)
    if d.shape != (L.N,):
        raise ValueError(f"decision vector must have shape ({L.N},), got {d.shape}")
    if not np.all(np.abs(d) == 1):
        raise ValueError("decision vector entries must be exactly +1 or -1")
    return d


def bit_weight_matrix(L: Landscape) -> np.ndarray:
    """Weights mapping a 0/1 decision pattern to per-contribution table indices.

    W[q, q] = 2**K and W[q, deps[q][i]] = 2**(K-1-i); the index of
    contribution q at decisions ``bits01`` is ``W[q] @ bits01``.
    """
    W = np.zeros((L.N, L.N), dtype=np.int64)
    W[np.arange(L.N), np.arange(L.N)] = 2**L.K
    for i in range(L.K):
        W[np.arange(L.N), L.deps[:, i]] = 2 ** (L.K - 1 - i)
    return W


def contribution_values(L: Landscape, d: np.ndarray) -> np.ndarray:
    """Per-decision contributions W_j at decision vector d (entries +-1)."""
    d = validate_decisions(L, d)
    bits = ((d + 1) // 2).astype(np.int64)
    idx = bit_weight_matrix(L) @ bits
    return L.tables[np.arange(L.N), idx]


def fitness(L: Landscape, d: np.ndarray) -> float:
    """Group fitness: the contributions averaged over all N decisions."""
    return float(contribution_values(L, d).sum() / L.N)


def fitness_batch(L: Landscape, bits01: np.ndarray) -> np.ndarray:
    """Group fitness for a (B, N) batch of 0/1 decision patterns."""
    idx = bits01.astype(np.int64) @ bit_weight_matrix(L).T
    vals = L.tables[np.arange(L.N)[None, :], idx]
    return vals.mean(axis=1)


def perceived_fitness(L: Landscape, C: CompetenceMatrix, k: int, d: np.ndarray) -> float:
    """Fitness as member k perceives it: known contributions averaged only.

    A member with an all-zero knowledge row perceives 0 by convention, so
    its opinion changes are driven purely by consensus seeking.
    """
    if not 0 <= k < C.M:
        raise IndexError(f"member index k must lie in [0, {C.M - 1}], got {k}")
    row = C.D[k]
    known = int(row.sum())
    if known == 0:
        return 0.0
    # same summation path as `fitness`, so a full knowledge row reproduces
    # the group fitness bit for bit
    vals = contribution_values(L, d)
    return float(vals[row != 0].sum() / known)


def decisions_from_code(code: int, N: int) -> np.ndarray:
    """Decode an integer into a +-1 decision vector (decision 0 = LSB)."""
    bits = (code >> np.arange(N)) & 1
    return (2 * bits - 1).astype(np.int8)


def code_from_decisions(d: np.ndarray) -> int:
    """Inverse of :func:`decisions_from_code`."""
    bits = (np.asarray(d) + 1) // 2
    return int(bits @ (1 << np.arange(len(bits))))


def global_max(L: Landscape, chunk: int = 1 << 16) -> tuple[np.ndarray, float]:
    """Exhaustively locate the fittest decision vector.

    Scans all 2^N vectors in encoding order, so ties resolve to the lowest
    binary encoding. Refuses N above MAX_ENUMERATION_N to stay tractable.
    """
    if L.N > MAX_ENUMERATION_N:
        raise ValueError(
            f"exhaustive search refused for N={L.N} > {MAX_ENUMERATION_N} "
            f"(2^{L.N} states)"
        )
    best_val = -np.inf
    best_code = 0
    total = 1 << L.N
    shifts = np.arange(L.N)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits01 = (codes[:, None] >> shifts[None, :]) & 1
        vals = fitness_batch(L, bits01)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_code = int(codes[i])
    return decisions_from_code(best_code, L.N), best_val


# ---------------------------------------------------------------------------
# JSON serialization (deps are 0-based decision indices)

def landscape_to_dict(L: Landscape) -> dict:
    return {
        "N": L.N,
        "K": L.K,
        "seed": L.seed,
        "deps": L.deps.tolist(),
        "tables": L.tables.tolist(),
    }


def landscape_from_dict(obj: dict) -> Landscape:
    N, K = int(obj["N"]), int(obj["K"])
    deps = np.asarray(obj["deps"], dtype=np.int32).reshape(N, K)
    tables = np.asarray(obj["tables"], dtype=np.float64).reshape(N, 2 ** (K + 1))
    return Landscape(N=N, K=K, deps=deps, tables=tables, seed=int(obj["seed"]))


def competence_to_dict(C: CompetenceMatrix) -> dict:
    return {"M": C.M, "N": C.N, "p": C.p, "seed": C.seed, "D": C.D.tolist()}


def competence_from_dict(obj: dict) -> CompetenceMatrix:
    M, N = int(obj["M"]), int(obj["N"])
    D = np.asarray(obj["D"], dtype=np.int8).reshape(M, N)
    return CompetenceMatrix(M=M, N=N, D=D, p=float(obj["p"]), seed=int(obj["seed"]))


def save_landscape(L: Landscape, path: str | Path) -> None:
    Path(path).write_text(json.dumps(landscape_to_dict(L)))


def load_landscape(path: str | Path) -> Landscape:
    return landscape_from_dict(json.loads(Path(path).read_text()))
