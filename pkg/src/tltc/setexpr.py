"""Backend-independent set descriptions and the proposition map.

A :data:`SetExpr` says *what* a set is without committing to a
representation. :func:`evaluate` turns it into a backend-native set by
calling the backend's constructors and set algebra, so the same
description can be realized as a level set or as a hybrid zonotope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from types import MappingProxyType
from typing import Any, Mapping, Union

import numpy as np

from tltc.errors import CycleError, UnboundProposition
from tltc.formula import is_identifier


@dataclass(frozen=True)
class Axis:
    name: str
    lower: float
    upper: float
    periodic: bool = False


@dataclass(frozen=True)
class StateSpace:
    axes: tuple[Axis, ...]

    def __post_init__(self):
        if not self.axes:
            raise ValueError("state space needs at least one axis")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axis names in {names}")
        for a in self.axes:
            if not a.lower < a.upper:
                raise ValueError(f"axis {a.name}: lower must be < upper")

    @classmethod
    def from_bounds(cls, **bounds: tuple[float, float]) -> StateSpace:
        return cls(tuple(Axis(k, float(lo), float(hi)) for k, (lo, hi) in bounds.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a.lower for a in self.axes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([a.upper for a in self.axes])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown axis {name!r}") from None

    def contains(self, z) -> bool:
        z = np.asarray(z, dtype=float)
        return z.shape == (self.ndim,) and bool(np.all(z >= self.lower) and np.all(z <= self.upper))


@dataclass(frozen=True)
class AffineInTime:
    """``offset + rate * t``."""

    offset: float
    rate: float = 0.0

    def at(self, t: float) -> float:
        return self.offset + self.rate * t


@dataclass(frozen=True)
class Interval:
    lo: AffineInTime | None = None
    hi: AffineInTime | None = None
    lo_open: bool = False
    hi_open: bool = False


# -- expression tree ----------------------------------------------------------

@dataclass(frozen=True)
class FullSpace:
    pass


@dataclass(frozen=True)
class EmptySet:
    pass


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; axes without an entry are unbounded.

    ``bounds`` is a tuple of ``(axis name, Interval)`` pairs so the node stays
    hashable. Open/closed flags are kept for the record but every backend
    treats both sides as closed.
    """

    bounds: tuple[tuple[str, Interval], ...]

    def interval(self, axis: str) -> Interval | None:
        for name, iv in self.bounds:
            if name == axis:
                return iv
        return None

    @property
    def time_varying(self) -> bool:
        return any((iv.lo is not None and iv.lo.rate != 0) or (iv.hi is not None and iv.hi.rate != 0)
                   for _, iv in self.bounds)

    def limits(self, space: StateSpace, t: float = 0.0, clip: bool = False):
        """Instantiate bounds at time ``t`` as ``(lo, hi)`` arrays.

        Missing bounds are -inf/+inf, or the state-space extent if ``clip``.
        """
        lo = np.full(space.ndim, -np.inf)
        hi = np.full(space.ndim, np.inf)
        for name, iv in self.bounds:
            i = space.index(name)
            if iv.lo is not None:
                lo[i] = iv.lo.at(t)
            if iv.hi is not None:
                hi[i] = iv.hi.at(t)
        if clip:
            lo = np.maximum(lo, space.lower)
            hi = np.minimum(hi, space.upper)
        return lo, hi


@dataclass(frozen=True)
class Halfspace:
    """``{z : normal . z <= offset}`` with the normal given per axis name."""

    normal: tuple[tuple[str, float], ...]
    offset: float

    def __post_init__(self):
        if not any(c != 0 for _, c in self.normal):
            raise ValueError("halfspace normal must be nonzero")

    def vector(self, space: StateSpace) -> np.ndarray:
        n = np.zeros(space.ndim)
        for name, c in self.normal:
            n[space.index(name)] = c
        return n


@dataclass(frozen=True)
class Union_:
    children: tuple[SetExpr, ...]


@dataclass(frozen=True)
class Intersection:
    children: tuple[SetExpr, ...]


@dataclass(frozen=True)
class Complement:
    child: SetExpr


@dataclass(frozen=True)
class Ref:
    name: str


SetExpr = Union[FullSpace, EmptySet, Box, Halfspace, Union_, Intersection, Complement, Ref]
LEAF_TYPES = (Box, Halfspace)


def _bound(v) -> AffineInTime | None:
    if v is None or isinstance(v, AffineInTime):
        return v
    if isinstance(v, tuple):
        return AffineInTime(float(v[0]), float(v[1]))
    return AffineInTime(float(v))


def box(**axes) -> Box:
    """Shorthand: ``box(x=(-50, 50), y=(None, 0))``.

    Each bound may be a number, ``(offset, rate)`` or an :class:`AffineInTime`.
    """
    return Box(tuple((k, Interval(_bound(lo), _bound(hi))) for k, (lo, hi) in axes.items()))


def halfspace(offset: float, **normal: float) -> Halfspace:
    return Halfspace(tuple((k, float(v)) for k, v in normal.items()), float(offset))


def union(*args: SetExpr) -> Union_:
    return Union_(tuple(args))


def intersection(*args: SetExpr) -> Intersection:
    return Intersection(tuple(args))


def expr_children(s: SetExpr) -> tuple[SetExpr, ...]:
    if isinstance(s, (Union_, Intersection)):
        return s.children
    if isinstance(s, Complement):
        return (s.child,)
    return ()


def refs(s: SetExpr) -> set[str]:
    out = set()
    stack = [s]
    while stack:
        e = stack.pop()
        if isinstance(e, Ref):
            out.add(e.name)
        stack.extend(expr_children(e))
    return out


def is_time_varying(s: SetExpr, m: PropositionMap | None = None) -> bool:
    if isinstance(s, Box):
        return s.time_varying
    if isinstance(s, Ref):
        return m is not None and is_time_varying(m.resolve(s.name), m)
    return any(is_time_varying(c, m) for c in expr_children(s))


def check_bounds(s: SetExpr, t0: float, tf: float, m: PropositionMap | None = None) -> None:
    """Verify ``lo <= hi`` for every box over ``[t0, tf]`` (affine, so endpoints suffice)."""
    stack = [s]
    while stack:
        e = stack.pop()
        if isinstance(e, Ref) and m is not None:
            stack.append(m.resolve(e.name))
        elif isinstance(e, Box):
            for name, iv in e.bounds:
                if iv.lo is None or iv.hi is None:
                    continue
                for t in (t0, tf):
                    if iv.lo.at(t) > iv.hi.at(t):
                        raise ValueError(f"box bound on {name!r} has lo > hi at t={t}")
        stack.extend(expr_children(e))


# -- proposition map ------------------------------------------------------------

@dataclass(frozen=True)
class PropositionMap:
    bindings: Mapping[str, SetExpr] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bindings", MappingProxyType(dict(self.bindings)))

    def __contains__(self, name: str) -> bool:
        return name in self.bindings

    def resolve(self, name: str) -> SetExpr:
        try:
            return self.bindings[name]
        except KeyError:
            raise UnboundProposition(name) from None

    def expand(self, s: SetExpr) -> SetExpr:
        """Replace every Ref by its (recursively expanded) binding."""
        if isinstance(s, Ref):
            return self.expand(self.resolve(s.name))
        if isinstance(s, Union_):
            return Union_(tuple(self.expand(c) for c in s.children))
        if isinstance(s, Intersection):
            return Intersection(tuple(self.expand(c) for c in s.children))
        if isinstance(s, Complement):
            return Complement(self.expand(s.child))
        return s


def bind(m: PropositionMap, name: str, s: SetExpr) -> PropositionMap:
    """Return a new map with ``name`` bound to ``s`` (shadowing any old binding).

    Raises:
        CycleError: if following Refs from the new binding returns to ``name``.
    """
    if not is_identifier(name):
        raise ValueError(f"invalid proposition name {name!r}")
    new = dict(m.bindings)
    new[name] = s
    # depth-first search for a cycle through name
    stack, seen = [(name, (name,))], set()
    while stack:
        cur, path = stack.pop()
        if cur in seen or cur not in new:
            continue
        seen.add(cur)
        for r in refs(new[cur]):
            if r == name:
                raise CycleError(" -> ".join(path + (r,)))
            stack.append((r, path + (r,)))
    return PropositionMap(new)


# -- evaluation -----------------------------------------------------------------

def push_complements(s: SetExpr, m: PropositionMap) -> SetExpr:
    """Expand refs and move complements onto leaves via De Morgan."""
    s = m.expand(s)

    def go(e, neg):
        if isinstance(e, Complement):
            return go(e.child, not neg)
        if isinstance(e, FullSpace):
            return EmptySet() if neg else e
        if isinstance(e, EmptySet):
            return FullSpace() if neg else e
        if isinstance(e, LEAF_TYPES):
            return Complement(e) if neg else e
        kids = tuple(go(c, neg) for c in e.children)
        flip = isinstance(e, Union_) == neg
        return Intersection(kids) if flip else Union_(kids)

    return go(s, False)


def evaluate(s: SetExpr, backend, m: PropositionMap | None = None, t: float | None = None):
    """Build ``s`` in ``backend``'s native representation.

    With ``t=None`` the result is time-indexed over the backend horizon;
    otherwise it is the set at the single instant ``t``.

    Raises:
        UnboundProposition: a Ref has no binding.
        UnsupportedGeometry: the backend cannot build a leaf or complement.
    """
    m = m if m is not None else PropositionMap()
    if getattr(backend, "leaf_complements_only", False):
        s = push_complements(s, m)
    return _eval(s, backend, m, t)


def _eval(s, backend, m, t):
    if isinstance(s, FullSpace):
        return backend.full(t)
    if isinstance(s, EmptySet):
        return backend.empty_set(t)
    if isinstance(s, Box):
        return backend.make_box(s, t)
    if isinstance(s, Halfspace):
        return backend.make_halfspace(s, t)
    if isinstance(s, Ref):
        return _eval(m.resolve(s.name), backend, m, t)
    if isinstance(s, Complement):
        return backend.complement(_eval(s.child, backend, m, t))
    parts = [_eval(c, backend, m, t) for c in s.children]
    if not parts:
        return backend.empty_set(t) if isinstance(s, Union_) else backend.full(t)
    op = backend.union if isinstance(s, Union_) else backend.intersect
    return reduce(op, parts)


# -- JSON encoding ------------------------------------------------------------------

def _bound_from_json(v) -> AffineInTime | None:
    if v is None:
        return None
    if isinstance(v, (int, float)):
        return AffineInTime(float(v))
    return AffineInTime(float(v.get("offset", 0.0)), float(v.get("rate", 0.0)))


def _bound_to_json(b: AffineInTime):
    if b.rate == 0:
        return b.offset
    return {"offset": b.offset, "rate": b.rate}


def from_json(obj: Mapping[str, Any]) -> SetExpr:
    kind = obj["kind"]
    if kind == "full":
        return FullSpace()
    if kind == "empty":
        return EmptySet()
    if kind == "box":
        items = []
        for name, b in obj.get("bounds", {}).items():
            items.append((name, Interval(_bound_from_json(b.get("lo")), _bound_from_json(b.get("hi")),
                                         bool(b.get("lo_open", False)), bool(b.get("hi_open", False)))))
        return Box(tuple(items))
    if kind == "halfspace":
        return Halfspace(tuple((k, float(v)) for k, v in obj["normal"].items()), float(obj["offset"]))
    if kind == "union":
        return Union_(tuple(from_json(a) for a in obj["args"]))
    if kind == "intersection":
        return Intersection(tuple(from_json(a) for a in obj["args"]))
    if kind == "complement":
        return Complement(from_json(obj["arg"]))
    if kind == "ref":
        return Ref(obj["name"])
    raise ValueError(f"unknown set kind {kind!r}")


def to_json(s: SetExpr) -> dict:
    if isinstance(s, FullSpace):
        return {"kind": "full"}
    if isinstance(s, EmptySet):
        return {"kind": "empty"}
    if isinstance(s, Box):
        bounds = {}
        for name, iv in s.bounds:
            b = {}
            if iv.lo is not None:
                b["lo"] = _bound_to_json(iv.lo)
            if iv.hi is not None:
                b["hi"] = _bound_to_json(iv.hi)
            if iv.lo_open:
                b["lo_open"] = True
            if iv.hi_open:
                b["hi_open"] = True
            bounds[name] = b
        return {"kind": "box", "bounds": bounds}
    if isinstance(s, Halfspace):
        return {"kind": "halfspace", "normal": dict(s.normal), "offset": s.offset}
    if isinstance(s, Union_):
        return {"kind": "union", "args": [to_json(c) for c in s.children]}
    if isinstance(s, Intersection):
        return {"kind": "intersection", "args": [to_json(c) for c in s.children]}
    if isinstance(s, Complement):
        return {"kind": "complement", "arg": to_json(s.child)}
    if isinstance(s, Ref):
        return {"kind": "ref", "name": s.name}
    raise TypeError(f"not a set expression: {s!r}")


def space_from_json(obj: Mapping[str, Any]) -> StateSpace:
    return StateSpace(tuple(Axis(a["name"], float(a["lower"]), float(a["upper"]), bool(a.get("periodic", False)))
                            for a in obj["axes"]))


def space_diameter(space: StateSpace) -> float:
    return float(math.dist(space.lower, space.upper))
