"""Hybrid-zonotope backend (discrete time, full LTL including Next)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tltc import setexpr as S
from tltc.backend import ApproxDir, Backend, BackendCapabilities, TimeModel
from tltc.errors import OutOfDomain, UnsupportedGeometry
from tltc.formula import Fragment
from tltc.hz.query import BINARY_CAP, hz_empty, hz_member
from tltc.hz.reach import LinearSystem, hz_always, hz_next, hz_reach_until
from tltc.hz.simplex import FEAS_TOL
from tltc.hz.zonotope import (
    HybridZonotope,
    hz_box,
    hz_complement_leaf,
    hz_empty_literal,
    hz_halfspace_intersect,
    hz_intersect,
    hz_prune,
    hz_union,
    space_box,
)
from tltc.tlt import PrimitiveSet, PrimitiveSpec, boolean_primitives, until_primitive


@dataclass(eq=False)
class HzSet:
    """One hybrid zonotope per remaining step ``k``, or a single static one.

    ``source`` keeps the set-builder expression for sets built directly from
    one, so the backend can complement them leaf by leaf.
    """

    sets: list[HybridZonotope] | HybridZonotope
    source: S.SetExpr | None = None
    owner: object = field(default=None, repr=False)

    @property
    def static(self) -> bool:
        return isinstance(self.sets, HybridZonotope)

    def at(self, k: int) -> HybridZonotope:
        return self.sets if self.static else self.sets[k]

    def sequence(self, n_steps: int) -> list[HybridZonotope]:
        return [self.at(k) for k in range(n_steps + 1)]


def hz_primitives() -> PrimitiveSet:
    prims = boolean_primitives()
    prims["U"] = until_primitive(ApproxDir.UNDER, accepts=False)
    prims["G"] = PrimitiveSpec(("next_pred", "intersect"), lambda b, c: b.always(c),
                               ApproxDir.UNDER, (False,), temporal=True)
    prims["X"] = PrimitiveSpec(("next_pred",), lambda b, a: b.next_pred(a),
                               ApproxDir.UNDER, (True,), temporal=True)
    return PrimitiveSet(Fragment.LTL, prims, eventually="derived", nnf=True)


class HzBackend(Backend):
    """Sets are :class:`HzSet` sequences over ``N + 1`` steps of ``sys.dt``.

    Real time ``t`` maps to step ``k = round((tf - t) / dt)``.
    """

    name = "hz"
    membership_tol = FEAS_TOL
    leaf_complements_only = True

    def __init__(self, space: S.StateSpace, sys: LinearSystem, N: int, t0: float = 0.0,
                 binary_cap: int = BINARY_CAP):
        if sys.n_z != space.ndim:
            raise ValueError(f"system has {sys.n_z} states, space has {space.ndim} axes")
        if N < 0:
            raise ValueError("N must be non-negative")
        self.space = space
        self.sys = sys
        self.N = int(N)
        self.dt = float(sys.dt)
        self.binary_cap = binary_cap
        self.times = t0 + self.dt * np.arange(self.N + 1)
        self._space_box = space_box(space)
        self.caps = BackendCapabilities(
            procedures=frozenset({"complement", "intersect", "union", "reach", "next_pred", "empty",
                                  "member", "make_box", "make_halfspace", "full", "empty_set"}),
            time_model=TimeModel.DISCRETE,
            step=self.dt,
            directions={"reach": ApproxDir.UNDER, "next_pred": ApproxDir.UNDER},
        )
        self.primitives = hz_primitives()

    # -- helpers -------------------------------------------------------------

    def time_of(self, k: int) -> float:
        return self.tf - k * self.dt

    def step_of(self, t) -> int:
        t = self.t0 if t is None else float(t)
        if not (self.t0 - 1e-9 <= t <= self.tf + 1e-9):
            raise OutOfDomain(f"time {t} outside [{self.t0}, {self.tf}]")
        return int(np.clip(round((self.tf - t) / self.dt), 0, self.N))

    def _wrap(self, sets, source=None) -> HzSet:
        return HzSet(sets, source, self)

    def _leaf(self, expr, t, build):
        if t is not None or not S.is_time_varying(expr):
            return self._wrap(build(self.t0 if t is None else t), expr)
        return self._wrap([build(self.time_of(k)) for k in range(self.N + 1)], expr)

    def _map(self, fn, *args) -> list[HybridZonotope] | HybridZonotope:
        if all(a.static for a in args):
            return fn(*(a.sets for a in args))
        return [fn(*(a.at(k) for a in args)) for k in range(self.N + 1)]

    # -- constructors -------------------------------------------------------------

    def full(self, t=None):
        return self._wrap(self._space_box, S.FullSpace())

    def empty_set(self, t=None):
        return self._wrap(hz_empty_literal(self.space.ndim), S.EmptySet())

    def make_box(self, box, t=None):
        def build(tt):
            lo, hi = box.limits(self.space, tt, clip=True)
            if np.any(lo > hi):
                return hz_empty_literal(self.space.ndim)
            return hz_box(lo, hi)
        return self._leaf(box, t, build)

    def make_halfspace(self, hs, t=None):
        return self._leaf(hs, t, lambda tt: hz_halfspace_intersect(self._space_box, hs.vector(self.space), hs.offset))

    # -- algebra ----------------------------------------------------------------------

    def complement(self, a):
        """Complement of a set-builder leaf within the state-space box.

        Raises:
            UnsupportedGeometry: ``a`` was not built directly from a leaf expression.
        """
        self.check_owner(a)
        src = a.source
        if src is None:
            raise UnsupportedGeometry("hybrid zonotopes are only complemented at set-builder leaves")
        pushed = S.push_complements(S.Complement(src), S.PropositionMap())
        if isinstance(pushed, S.Complement):
            leaf = pushed.child
            out = self._leaf(leaf, None, lambda tt: hz_complement_leaf(leaf, self.space, tt))
            out.source = pushed
            return out
        return S.evaluate(pushed, self)

    def intersect(self, a, b):
        self.check_owner(a, b)
        src = S.Intersection((a.source, b.source)) if a.source is not None and b.source is not None else None
        return self._wrap(self._map(lambda x, y: hz_prune(hz_intersect(x, y)), a, b), src)

    def union(self, a, b):
        self.check_owner(a, b)
        src = S.Union_((a.source, b.source)) if a.source is not None and b.source is not None else None
        return self._wrap(self._map(lambda x, y: hz_prune(hz_union(x, y)), a, b), src)

    def reach(self, target, constraint):
        self.check_owner(target, constraint)
        return self._wrap(hz_reach_until(constraint.sequence(self.N), target.sequence(self.N), self.sys, self.N))

    def always(self, c):
        self.check_owner(c)
        return self._wrap(hz_always(c.sequence(self.N), self.sys, self.N))

    def next_pred(self, a):
        self.check_owner(a)
        return self._wrap(hz_next(a.sequence(self.N), self._space_box, self.sys, self.N))

    # -- queries -------------------------------------------------------------------------

    def empty(self, s, t=None) -> bool:
        self.check_owner(s)
        return hz_empty(s.at(self.step_of(t)), self.binary_cap)

    def member(self, s, z, t) -> bool:
        self.check_owner(s)
        z = np.asarray(z, dtype=float)
        if not self.space.contains(z):
            raise OutOfDomain(f"state {z.tolist()} outside the state space")
        return hz_member(s.at(self.step_of(t)), z, self.binary_cap)

    def stats(self, s) -> dict:
        Z = s.at(self.N)
        return {"dt": self.dt, "n_steps": self.N, **Z.size()}
