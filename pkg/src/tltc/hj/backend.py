"""Hamilton-Jacobi level-set backend (continuous time, no Next)."""

from __future__ import annotations

import numpy as np

from tltc import setexpr as S
from tltc.backend import ApproxDir, Backend, BackendCapabilities, TimeModel
from tltc.errors import OutOfDomain
from tltc.formula import Fragment
from tltc.hj.levelset import (
    MEMBERSHIP_TOL,
    Grid,
    LevelSet,
    interpolate,
    ls_complement,
    ls_intersect,
    ls_union,
    signed_distance,
)
from tltc.hj.solver import HjConfig, hj_avoid, hj_reach
from tltc.tlt import PrimitiveSet, PrimitiveSpec, boolean_primitives, until_primitive


def _always_via_avoid(b, c):
    return b.complement(b.avoid(b.complement(c)))


def hj_primitives() -> PrimitiveSet:
    prims = boolean_primitives()
    prims["U"] = until_primitive(ApproxDir.UNDER, accepts=True)
    prims["G"] = PrimitiveSpec(("avoid", "complement"), _always_via_avoid, ApproxDir.UNDER,
                               (True,), temporal=True)
    return PrimitiveSet(Fragment.LTL_NO_NEXT, prims, eventually="derived")


class HjBackend(Backend):
    """Sets are :class:`LevelSet` objects over one grid and one time axis.

    Real time ``t`` maps to the stored slice nearest ``tf - t``.
    """

    name = "hj"
    membership_tol = MEMBERSHIP_TOL

    def __init__(self, space: S.StateSpace, cfg: HjConfig):
        if cfg.grid.names != space.names:
            raise ValueError("grid axes must match the state space axes")
        self.space = space
        self.cfg = cfg
        self.grid: Grid = cfg.grid
        self.tprimes = cfg.stored_times
        self.times = (cfg.tf - self.tprimes)[::-1]
        self.caps = BackendCapabilities(
            procedures=frozenset({"complement", "intersect", "union", "reach", "avoid", "empty",
                                  "member", "make_box", "make_halfspace", "full", "empty_set"}),
            time_model=TimeModel.CONTINUOUS,
            directions={"reach": ApproxDir.UNDER, "avoid": ApproxDir.UNDER},
            share_safe=True,
        )
        self.primitives = hj_primitives()

    # -- constructors ---------------------------------------------------------

    def _wrap(self, values):
        return LevelSet(values, self.tprimes, self.grid, self)

    def _build(self, expr, t):
        if t is not None or not S.is_time_varying(expr):
            return self._wrap(signed_distance(expr, self.grid, self.space, self.cfg.t0 if t is None else t)[None])
        slices = [signed_distance(expr, self.grid, self.space, self.cfg.tf - tp) for tp in self.tprimes]
        return self._wrap(np.stack(slices))

    def full(self, t=None):
        return self._build(S.FullSpace(), t)

    def empty_set(self, t=None):
        return self._build(S.EmptySet(), t)

    def make_box(self, box, t=None):
        return self._build(box, t)

    def make_halfspace(self, hs, t=None):
        return self._build(hs, t)

    # -- algebra -----------------------------------------------------------------

    def complement(self, a):
        self.check_owner(a)
        return ls_complement(a)

    def intersect(self, a, b):
        self.check_owner(a, b)
        return ls_intersect(a, b)

    def union(self, a, b):
        self.check_owner(a, b)
        return ls_union(a, b)

    def reach(self, target, constraint):
        self.check_owner(target, constraint)
        return hj_reach(target, constraint, self.cfg)

    def avoid(self, target):
        self.check_owner(target)
        return hj_avoid(target, self.cfg)

    # -- queries ---------------------------------------------------------------------

    def _slice(self, s: LevelSet, t):
        t = self.cfg.t0 if t is None else float(t)
        if not (self.cfg.t0 - 1e-9 <= t <= self.cfg.tf + 1e-9):
            raise OutOfDomain(f"time {t} outside [{self.cfg.t0}, {self.cfg.tf}]")
        return s.slice_at(self.cfg.tf - t)

    def empty(self, s, t=None) -> bool:
        self.check_owner(s)
        return bool(np.min(self._slice(s, t)) > self.membership_tol)

    def member(self, s, z, t) -> bool:
        self.check_owner(s)
        return interpolate(self._slice(s, t), self.grid, z) <= self.membership_tol

    def value(self, s, z, t) -> float:
        return interpolate(self._slice(s, t), self.grid, z)

    def stats(self, s) -> dict:
        n, dt, stored = self.cfg.plan()
        return {"grid_shape": list(self.grid.shape), "n_steps": int(n), "dt": float(dt),
                "stored_slices": int(len(stored))}
