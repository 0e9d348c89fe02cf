"""Grids, time-indexed level sets, signed distance and level-set algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from tltc import setexpr as S
from tltc.errors import OutOfDomain, ShapeMismatch

# values with |V| at or below this count as on the boundary
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    counts: tuple[int, ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper) == len(self.counts)):
            raise ValueError("grid axis specs have inconsistent lengths")
        if not self.periodic:
            object.__setattr__(self, "periodic", (False,) * len(self.names))
        for n, lo, hi, c in zip(self.names, self.lower, self.upper, self.counts):
            if c < 3:
                raise ValueError(f"axis {n}: need at least 3 points, got {c}")
            if not hi > lo:
                raise ValueError(f"axis {n}: upper must exceed lower")

    @classmethod
    def from_space(cls, space: S.StateSpace, counts) -> Grid:
        if isinstance(counts, dict):
            counts = [counts[a.name] for a in space.axes]
        return cls(space.names, tuple(a.lower for a in space.axes), tuple(a.upper for a in space.axes),
                   tuple(int(c) for c in counts), tuple(a.periodic for a in space.axes))

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.counts)

    @cached_property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / (np.array(self.counts) - 1)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.counts))

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        """Sparse open mesh; broadcasts to the full grid shape."""
        return tuple(np.meshgrid(*self.coords, indexing="ij", sparse=True))

    @cached_property
    def diameter(self) -> float:
        return float(math.dist(self.lower, self.upper))

    def points(self) -> np.ndarray:
        """All grid points as an ``(N, ndim)`` array in C order."""
        full = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([g.ravel() for g in full], axis=1)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def contains(self, z, tol: float = 1e-9) -> bool:
        z = np.asarray(z, dtype=float)
        return z.shape == (self.ndim,) and bool(
            np.all(z >= np.array(self.lower) - tol) and np.all(z <= np.array(self.upper) + tol))


@dataclass(eq=False)
class LevelSet:
    """Value-function samples; the set is where ``V <= 0``.

    ``values`` has shape ``(K, *grid.shape)``. ``times`` holds the remaining
    time ``t' = tf - t`` of every stored slice, ascending from 0. A
    time-invariant set stores a single slice (``K == 1``) that applies at
    every stored time.
    """

    values: np.ndarray
    times: np.ndarray
    grid: Grid
    owner: object = field(default=None, repr=False)

    def __post_init__(self):
        k = self.values.shape[0]
        if self.values.shape[1:] != self.grid.shape:
            raise ShapeMismatch(f"values {self.values.shape[1:]} do not match grid {self.grid.shape}")
        if k not in (1, len(self.times)):
            raise ShapeMismatch(f"{k} slices for {len(self.times)} stored times")

    @property
    def static(self) -> bool:
        return self.values.shape[0] == 1

    def slice_index(self, tprime: float) -> int:
        """Index of the stored slice nearest to remaining time ``tprime``."""
        if self.static:
            return 0
        return int(np.argmin(np.abs(self.times - tprime)))

    def slice_at(self, tprime: float) -> np.ndarray:
        return self.values[self.slice_index(tprime)]

    def expanded(self) -> np.ndarray:
        """Values with one slice per stored time."""
        if self.static and len(self.times) > 1:
            return np.broadcast_to(self.values, (len(self.times),) + self.grid.shape)
        return self.values

    def with_values(self, values: np.ndarray) -> LevelSet:
        return LevelSet(values, self.times, self.grid, self.owner)


# -- signed distance ------------------------------------------------------------------

def box_sdf(grid: Grid, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact signed distance to an axis-aligned box (infinite bounds allowed)."""
    q = []
    for i, z in enumerate(grid.mesh):
        d = np.maximum(lo[i] - z, z - hi[i]) if np.isfinite(lo[i]) or np.isfinite(hi[i]) else None
        q.append(d)
    q = [d for d in q if d is not None]
    if not q:
        return np.full(grid.shape, -grid.diameter)
    q = np.broadcast_arrays(*q)
    outside = np.sqrt(sum(np.maximum(d, 0.0) ** 2 for d in q))
    inside = np.minimum(np.maximum.reduce(q), 0.0)
    return np.broadcast_to(outside + inside, grid.shape).copy()


def halfspace_sdf(grid: Grid, normal: np.ndarray, offset: float) -> np.ndarray:
    val = sum(n * z for n, z in zip(normal, grid.mesh)) - offset
    return np.broadcast_to(val / np.linalg.norm(normal), grid.shape).copy()


def signed_distance(expr: S.SetExpr, grid: Grid, space: S.StateSpace, t: float = 0.0,
                    m: S.PropositionMap | None = None) -> np.ndarray:
    """Single-slice implicit surface for ``expr`` at real time ``t``.

    Leaves use exact signed distances (Lipschitz constant 1); boolean
    combinations use the min/max/negate algebra. The universe is the
    constant ``-grid.diameter`` and the empty set its negation.
    """
    if isinstance(expr, S.Ref):
        if m is None:
            raise TypeError("Ref in expression but no proposition map given")
        return signed_distance(m.resolve(expr.name), grid, space, t, m)
    if isinstance(expr, S.FullSpace):
        return np.full(grid.shape, -grid.diameter)
    if isinstance(expr, S.EmptySet):
        return np.full(grid.shape, grid.diameter)
    if isinstance(expr, S.Box):
        lo, hi = expr.limits(space, t)
        return box_sdf(grid, lo, hi)
    if isinstance(expr, S.Halfspace):
        return halfspace_sdf(grid, expr.vector(space), expr.offset)
    if isinstance(expr, S.Complement):
        return -signed_distance(expr.child, grid, space, t, m)
    parts = [signed_distance(c, grid, space, t, m) for c in expr.children]
    if isinstance(expr, S.Union_):
        return np.minimum.reduce(parts) if parts else np.full(grid.shape, grid.diameter)
    return np.maximum.reduce(parts) if parts else np.full(grid.shape, -grid.diameter)


# -- algebra -------------------------------------------------------------------------

def _check_pair(a: LevelSet, b: LevelSet):
    if a.grid != b.grid:
        raise ShapeMismatch("level sets live on different grids")
    if not (a.static or b.static) and a.values.shape[0] != b.values.shape[0]:
        raise ShapeMismatch("level sets have different numbers of time slices")
    if not (a.static or b.static) and not np.array_equal(a.times, b.times):
        raise ShapeMismatch("level sets have different time axes")


def ls_complement(a: LevelSet) -> LevelSet:
    return a.with_values(-a.values)


def ls_intersect(a: LevelSet, b: LevelSet) -> LevelSet:
    _check_pair(a, b)
    base = b if a.static else a
    return base.with_values(np.maximum(a.values, b.values))


def ls_union(a: LevelSet, b: LevelSet) -> LevelSet:
    _check_pair(a, b)
    base = b if a.static else a
    return base.with_values(np.minimum(a.values, b.values))


# -- interpolation -----------------------------------------------------------------------

def interpolate(values: np.ndarray, grid: Grid, z) -> float:
    """Multilinear interpolation of one slice at point ``z``.

    Raises:
        OutOfDomain: ``z`` lies outside the grid box.
    """
    z = np.asarray(z, dtype=float)
    if not grid.contains(z):
        raise OutOfDomain(f"state {z.tolist()} outside grid bounds")
    lo = np.array(grid.lower)
    pos = (z - lo) / grid.spacing
    idx = np.clip(np.floor(pos).astype(int), 0, np.array(grid.counts) - 2)
    w = np.clip(pos - idx, 0.0, 1.0)
    out = 0.0
    for corner in range(1 << grid.ndim):
        bits = [(corner >> d) & 1 for d in range(grid.ndim)]
        weight = 1.0
        for d, bit in enumerate(bits):
            weight *= w[d] if bit else 1.0 - w[d]
        if weight:
            out += weight * values[tuple(idx + np.array(bits))]
    return float(out)
