"""Discrete-time linear systems and predecessor-based reachability.

Step index ``k`` counts remaining steps: ``k = 0`` is the final instant and
``k = N`` the initial one. Set sequences are lists indexed by ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tltc.errors import DimensionMismatch
from tltc.hz.zonotope import (
    HybridZonotope,
    hz_box,
    hz_cartesian,
    hz_empty_literal,
    hz_gen_intersect,
    hz_linear_map,
    hz_prune,
    hz_union,
)


def zoh(A, B, dt: float, terms: int = 20):
    """Zero-order-hold discretization via the exponential of ``[[A, B], [0, 0]] dt``.

    Uses scaling and squaring around a truncated Taylor series.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n], M[:n, n:] = A, B
    M *= dt
    norm = np.linalg.norm(M, np.inf)
    s = max(0, math.ceil(math.log2(norm))) + 1 if norm > 0 else 0
    M = M / 2 ** s
    E = np.eye(n + m)
    term = np.eye(n + m)
    for i in range(1, terms + 1):
        term = term @ M / i
        E = E + term
    for _ in range(s):
        E = E @ E
    return E[:n, :n], E[:n, n:]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """``z+ = A z + B u`` with ``u`` in a box."""

    A: np.ndarray
    B: np.ndarray
    dt: float
    u_lo: np.ndarray
    u_hi: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        B = B.reshape(A.shape[0], -1) if B.size else np.zeros((A.shape[0], 0))
        lo = np.atleast_1d(np.asarray(self.u_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.u_hi, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[1] != lo.size or lo.shape != hi.shape:
            raise DimensionMismatch(f"B has {B.shape[1]} inputs but input box has {lo.size}")
        if not self.dt > 0:
            raise ValueError("step must be positive")
        for k, v in (("A", A), ("B", B), ("u_lo", lo), ("u_hi", hi)):
            object.__setattr__(self, k, v)

    @classmethod
    def from_continuous(cls, A, B, dt, u_lo, u_hi) -> LinearSystem:
        Ad, Bd = zoh(A, B, dt)
        return cls(Ad, Bd, dt, u_lo, u_hi)

    @property
    def n_z(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def input_set(self) -> HybridZonotope:
        return hz_box(self.u_lo, self.u_hi)

    def step(self, z, u) -> np.ndarray:
        return self.A @ np.asarray(z, dtype=float) + self.B @ np.atleast_1d(np.asarray(u, dtype=float))


def hz_pred(T: HybridZonotope, C: HybridZonotope, sys: LinearSystem) -> HybridZonotope:
    """``{z in C : exists u in U, A z + B u in T}``.

    Lifts to ``C x U``, intersects with ``T`` under ``[A B]`` and projects
    back onto the state, so ``A`` need not be invertible.
    """
    if T.n != sys.n_z or C.n != sys.n_z:
        raise DimensionMismatch(f"sets of dimension {T.n}/{C.n} for a {sys.n_z}-state system")
    lifted = hz_gen_intersect(hz_cartesian(C, sys.input_set), T, np.hstack([sys.A, sys.B]))
    proj = np.hstack([np.eye(sys.n_z), np.zeros((sys.n_z, sys.n_u))])
    return hz_prune(hz_linear_map(proj, lifted))


def _at(seq, k):
    return seq if isinstance(seq, HybridZonotope) else seq[k]


def hz_reach_until(phi1, phi2, sys: LinearSystem, N: int) -> list[HybridZonotope]:
    """``R_0 = phi2``, ``R_{k+1} = phi2 ∪ pred(R_k; phi1)``.

    ``phi1`` and ``phi2`` are single sets or sequences indexed by ``k``.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    out = [_at(phi2, 0)]
    for k in range(N):
        out.append(hz_prune(hz_union(_at(phi2, k + 1), hz_pred(out[-1], _at(phi1, k + 1), sys))))
    return out


def hz_always(C, sys: LinearSystem, N: int) -> list[HybridZonotope]:
    """``W_0 = C``, ``W_{k+1} = pred(W_k; C)``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    out = [_at(C, 0)]
    for k in range(N):
        out.append(hz_pred(out[-1], _at(C, k + 1), sys))
    return out


def hz_next(T, space: HybridZonotope, sys: LinearSystem, N: int) -> list[HybridZonotope]:
    """States with a successor in ``T``; empty at the final step."""
    out = [hz_empty_literal(sys.n_z)]
    for k in range(N):
        out.append(hz_pred(_at(T, k), space, sys))
    return out
