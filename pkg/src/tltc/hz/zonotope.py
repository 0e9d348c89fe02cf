"""Hybrid zonotopes and their closed-form set operations.

A hybrid zonotope ``<Gc, Gb, c, Ac, Ab, b>`` is the set

    {Gc xc + Gb xb + c : xc in [-1, 1]^ng, xb in {-1, 1}^nb, Ac xc + Ab xb = b}.

All operations build new matrices by concatenation; none of them solve an
optimization problem. Emptiness and membership live in :mod:`tltc.hz.query`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tltc import setexpr as S
from tltc.errors import DimensionMismatch, UnsupportedGeometry

ZERO_TOL = 1e-12


def _mat(a, rows, cols=None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((rows, 0 if cols is None else cols))
    return a.reshape(rows, -1) if a.ndim < 2 else a


@dataclass(frozen=True, eq=False)
class HybridZonotope:
    Gc: np.ndarray
    Gb: np.ndarray
    c: np.ndarray
    Ac: np.ndarray
    Ab: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        if n == 0:
            raise DimensionMismatch("a hybrid zonotope needs at least one dimension")
        Gc = _mat(self.Gc, n)
        Gb = _mat(self.Gb, n)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        nc = b.size
        Ac = _mat(self.Ac, nc, Gc.shape[1]) if nc else np.zeros((0, Gc.shape[1]))
        Ab = _mat(self.Ab, nc, Gb.shape[1]) if nc else np.zeros((0, Gb.shape[1]))
        if Gc.shape[0] != n or Gb.shape[0] != n:
            raise DimensionMismatch(f"generator rows {Gc.shape[0]}/{Gb.shape[0]} != dimension {n}")
        if Ac.shape != (nc, Gc.shape[1]) or Ab.shape != (nc, Gb.shape[1]):
            raise DimensionMismatch(
                f"constraint blocks {Ac.shape}, {Ab.shape} inconsistent with {nc} rows, "
                f"{Gc.shape[1]} continuous and {Gb.shape[1]} binary generators")
        for name, v in (("Gc", Gc), ("Gb", Gb), ("c", c), ("Ac", Ac), ("Ab", Ab), ("b", b)):
            v = np.array(v, dtype=float)
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def ng(self) -> int:
        return self.Gc.shape[1]

    @property
    def nb(self) -> int:
        return self.Gb.shape[1]

    @property
    def nc(self) -> int:
        return self.b.size

    def size(self) -> dict:
        return {"n_continuous": self.ng, "n_binary": self.nb, "n_constraints": self.nc}

    def to_json(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("Gc", "Gb", "c", "Ac", "Ab", "b")}

    @classmethod
    def from_json(cls, obj) -> HybridZonotope:
        n = len(obj["c"])
        nc = len(obj["b"])
        Gc = np.asarray(obj["Gc"], dtype=float).reshape(n, -1)
        Gb = np.asarray(obj["Gb"], dtype=float).reshape(n, -1)
        return cls(Gc, Gb, obj["c"], np.asarray(obj["Ac"], dtype=float).reshape(nc, Gc.shape[1]),
                   np.asarray(obj["Ab"], dtype=float).reshape(nc, Gb.shape[1]), obj["b"])


# -- constructors ----------------------------------------------------------------

def hz_box(lower, upper) -> HybridZonotope:
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    hi = np.atleast_1d(np.asarray(upper, dtype=float))
    if lo.size == 0 or lo.shape != hi.shape:
        raise DimensionMismatch("box bounds must be non-empty and of equal length")
    if np.any(lo > hi) or not np.all(np.isfinite(lo) & np.isfinite(hi)):
        raise ValueError("box bounds must be finite with lower <= upper")
    n = lo.size
    return HybridZonotope(np.diag((hi - lo) / 2), np.zeros((n, 0)), (hi + lo) / 2,
                          np.zeros((0, n)), np.zeros((0, 0)), np.zeros(0))


def hz_empty_literal(n: int) -> HybridZonotope:
    """Canonical empty set: one continuous factor constrained to equal 2."""
    return HybridZonotope(np.zeros((n, 1)), np.zeros((n, 0)), np.zeros(n),
                          np.ones((1, 1)), np.zeros((1, 0)), np.array([2.0]))


# -- affine operations -------------------------------------------------------------

def hz_linear_map(R, Z: HybridZonotope) -> HybridZonotope:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[1] != Z.n:
        raise DimensionMismatch(f"map with {R.shape[1]} columns applied to a {Z.n}-dimensional set")
    return HybridZonotope(R @ Z.Gc, R @ Z.Gb, R @ Z.c, Z.Ac, Z.Ab, Z.b)


def _blockdiag(*blocks) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def hz_minkowski(Z: HybridZonotope, W: HybridZonotope) -> HybridZonotope:
    if Z.n != W.n:
        raise DimensionMismatch(f"Minkowski sum of {Z.n}- and {W.n}-dimensional sets")
    return HybridZonotope(np.hstack([Z.Gc, W.Gc]), np.hstack([Z.Gb, W.Gb]), Z.c + W.c,
                          _blockdiag(Z.Ac, W.Ac), _blockdiag(Z.Ab, W.Ab), np.r_[Z.b, W.b])


def hz_gen_intersect(Z: HybridZonotope, W: HybridZonotope, R=None) -> HybridZonotope:
    """``{x in Z : R x in W}`` (plain intersection when ``R`` is omitted)."""
    R = np.eye(Z.n) if R is None else np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape != (W.n, Z.n):
        raise DimensionMismatch(f"R has shape {R.shape}, expected {(W.n, Z.n)}")
    Ac = np.vstack([_blockdiag(Z.Ac, W.Ac), np.hstack([R @ Z.Gc, -W.Gc])])
    Ab = np.vstack([_blockdiag(Z.Ab, W.Ab), np.hstack([R @ Z.Gb, -W.Gb])])
    return HybridZonotope(np.hstack([Z.Gc, np.zeros((Z.n, W.ng))]),
                          np.hstack([Z.Gb, np.zeros((Z.n, W.nb))]), Z.c,
                          Ac, Ab, np.r_[Z.b, W.b, W.c - R @ Z.c])


def hz_intersect(Z: HybridZonotope, W: HybridZonotope) -> HybridZonotope:
    return hz_gen_intersect(Z, W)


def hz_halfspace_intersect(Z: HybridZonotope, h, f: float) -> HybridZonotope:
    """``Z ∩ {x : h . x <= f}`` with one slack generator."""
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != Z.n:
        raise DimensionMismatch(f"normal of length {h.size} for a {Z.n}-dimensional set")
    hGc, hGb = h @ Z.Gc, h @ Z.Gb
    # upper bound of f - h.x over the unconstrained factor box
    d = f - h @ Z.c + np.abs(hGc).sum() + np.abs(hGb).sum()
    if d < 0:
        return hz_empty_literal(Z.n)
    Ac = np.vstack([np.hstack([Z.Ac, np.zeros((Z.nc, 1))]), np.r_[hGc, d / 2][None]])
    Ab = np.vstack([Z.Ab, hGb[None]])
    return HybridZonotope(np.hstack([Z.Gc, np.zeros((Z.n, 1))]), Z.Gb, Z.c, Ac, Ab,
                          np.r_[Z.b, f - h @ Z.c - d / 2])


def hz_cartesian(Z: HybridZonotope, W: HybridZonotope) -> HybridZonotope:
    return HybridZonotope(_blockdiag(Z.Gc, W.Gc), _blockdiag(Z.Gb, W.Gb), np.r_[Z.c, W.c],
                          _blockdiag(Z.Ac, W.Ac), _blockdiag(Z.Ab, W.Ab), np.r_[Z.b, W.b])


# -- union -------------------------------------------------------------------------

def _branch(Z: HybridZonotope, sign: float):
    """Constraint blocks that switch ``Z`` on for ``lam == sign`` and off otherwise.

    In the off state every factor that moves the point is pinned (continuous
    factors to 0, binaries to -1) through slack factors, and the constraint
    right-hand side is scaled to zero so the remaining factors stay feasible.
    Returns ``(Ac, Ab, lam_col, rhs, n_slack)`` with the slack columns
    appended after ``Z``'s own continuous factors.
    """
    cols_c = np.flatnonzero(np.any(np.abs(Z.Gc) > ZERO_TOL, axis=0))
    cols_b = np.flatnonzero(np.any(np.abs(Z.Gb) > ZERO_TOL, axis=0))
    n_slack = 2 * cols_c.size + cols_b.size
    rows = []
    # own constraints, homogenized by s = (1 + sign * lam) / 2
    half = 0.5 * (Z.b + Z.Ab.sum(axis=1))
    own_c = np.hstack([Z.Ac, np.zeros((Z.nc, n_slack))])
    rows.append((own_c, Z.Ab, -sign * half, 0.5 * (Z.b - Z.Ab.sum(axis=1))))
    k = Z.ng
    for i in cols_c:
        for s in (1.0, -1.0):
            a = np.zeros((1, Z.ng + n_slack))
            a[0, i], a[0, k] = s, 1.0
            k += 1
            rows.append((a, np.zeros((1, Z.nb)), np.array([-sign * 0.5]), np.array([-0.5])))
    for i in cols_b:
        a = np.zeros((1, Z.ng + n_slack))
        a[0, k] = 1.0
        k += 1
        ab = np.zeros((1, Z.nb))
        ab[0, i] = 1.0
        rows.append((a, ab, np.array([-sign]), np.array([-1.0])))
    Ac = np.vstack([r[0] for r in rows])
    Ab = np.vstack([r[1] for r in rows])
    lam = np.concatenate([np.atleast_1d(r[2]) for r in rows])
    rhs = np.concatenate([np.atleast_1d(r[3]) for r in rows])
    return Ac, Ab, lam, rhs, n_slack


def hz_union(Z: HybridZonotope, W: HybridZonotope) -> HybridZonotope:
    """Exact union with one extra binary ``lam`` (-1 selects Z, +1 selects W)."""
    if Z.n != W.n:
        raise DimensionMismatch(f"union of {Z.n}- and {W.n}-dimensional sets")
    one_z, one_w = Z.Gb.sum(axis=1), W.Gb.sum(axis=1)
    c = 0.5 * (Z.c + one_z + W.c + one_w)
    g = 0.5 * (W.c - one_w - Z.c + one_z)
    Acz, Abz, lz, rz, sz = _branch(Z, -1.0)
    Acw, Abw, lw, rw, sw = _branch(W, 1.0)
    Gc = np.hstack([Z.Gc, np.zeros((Z.n, sz)), W.Gc, np.zeros((W.n, sw))])
    Gb = np.hstack([Z.Gb, W.Gb, g[:, None]])
    Ac = _blockdiag(Acz, Acw)
    Ab = np.hstack([_blockdiag(Abz, Abw), np.r_[lz, lw][:, None]])
    return HybridZonotope(Gc, Gb, c, Ac, Ab, np.r_[rz, rw])


# -- complement of leaves ------------------------------------------------------------

def space_box(space: S.StateSpace) -> HybridZonotope:
    return hz_box(space.lower, space.upper)


def hz_complement_leaf(expr, space: S.StateSpace, t: float = 0.0) -> HybridZonotope:
    """Complement of a set-builder leaf within the state-space box.

    Raises:
        UnsupportedGeometry: ``expr`` is not a Box, Halfspace, FullSpace or EmptySet.
    """
    n = space.ndim
    if isinstance(expr, S.FullSpace):
        return hz_empty_literal(n)
    if isinstance(expr, S.EmptySet):
        return space_box(space)
    if isinstance(expr, S.Halfspace):
        return hz_halfspace_intersect(space_box(space), -expr.vector(space), -expr.offset)
    if not isinstance(expr, S.Box):
        raise UnsupportedGeometry(f"cannot complement {type(expr).__name__}; only leaves are supported")
    lo, hi = expr.limits(space, t, clip=True)
    if np.any(lo > hi):
        return space_box(space)
    slabs = []
    for i in range(n):
        for a, b in ((space.lower[i], lo[i]), (hi[i], space.upper[i])):
            if b > a:
                l, u = space.lower.copy(), space.upper.copy()
                l[i], u[i] = a, b
                slabs.append(hz_box(l, u))
    if not slabs:
        return hz_empty_literal(n)
    out = slabs[0]
    for s in slabs[1:]:
        out = hz_union(out, s)
    return out


# -- pruning ----------------------------------------------------------------------------

def hz_prune(Z: HybridZonotope) -> HybridZonotope:
    """Drop factors that appear nowhere and constraint rows that are all zero."""
    keep_c = np.any(np.abs(Z.Gc) > ZERO_TOL, axis=0) | np.any(np.abs(Z.Ac) > ZERO_TOL, axis=0)
    keep_b = np.any(np.abs(Z.Gb) > ZERO_TOL, axis=0) | np.any(np.abs(Z.Ab) > ZERO_TOL, axis=0)
    Ac, Ab = Z.Ac[:, keep_c], Z.Ab[:, keep_b]
    row_norm = np.sqrt((Ac ** 2).sum(axis=1) + (Ab ** 2).sum(axis=1))
    zero_rows = row_norm < ZERO_TOL
    if np.any(np.abs(Z.b[zero_rows]) > ZERO_TOL):
        return hz_empty_literal(Z.n)
    keep_r = ~zero_rows
    return HybridZonotope(Z.Gc[:, keep_c], Z.Gb[:, keep_b], Z.c, Ac[keep_r], Ab[keep_r], Z.b[keep_r])
