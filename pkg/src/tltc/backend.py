"""The contract a reachability implementation must satisfy.

A backend is any object exposing ``caps`` (:class:`BackendCapabilities`),
``primitives`` (a :class:`tltc.tlt.PrimitiveSet`) and the procedures named by
its capability tags. The TLT orchestrator only ever talks to backends
through these names, which is what lets one specification be realized by
unrelated set representations.

Procedure signatures (``t=None`` means "time-indexed over the horizon"):

=================  ==========================================================
tag                method
=================  ==========================================================
full / empty_set   ``full(t=None)``, ``empty_set(t=None)``
make_box           ``make_box(box, t=None)``
make_halfspace     ``make_halfspace(halfspace, t=None)``
complement         ``complement(a)`` -- relative to the state space
intersect / union  ``intersect(a, b)``, ``union(a, b)``
reach              ``reach(target, constraint)`` -- backward reachable tube
avoid              ``avoid(target)`` -- states forced into target
next_pred          ``next_pred(target)`` -- one-step predecessor
empty / member     ``empty(s, t=None)``, ``member(s, z, t)``
=================  ==========================================================
"""

from __future__ import annotations

import abc
import enum
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from tltc.errors import BackendMismatch

PROCEDURES = frozenset({
    "complement", "intersect", "union", "reach", "avoid", "next_pred",
    "empty", "member", "make_box", "make_halfspace", "full", "empty_set",
})


class ApproxDir(enum.Enum):
    EXACT = "EXACT"
    UNDER = "UNDER"
    OVER = "OVER"

    def flip(self) -> ApproxDir:
        return {ApproxDir.UNDER: ApproxDir.OVER, ApproxDir.OVER: ApproxDir.UNDER}.get(self, self)


def join(*dirs: ApproxDir) -> ApproxDir | None:
    """Half-lattice join; ``None`` signals an UNDER/OVER conflict."""
    kinds = {d for d in dirs if d is not ApproxDir.EXACT}
    if not kinds:
        return ApproxDir.EXACT
    if len(kinds) == 1:
        return kinds.pop()
    return None


class TimeModel(enum.Enum):
    CONTINUOUS = "CONTINUOUS"
    DISCRETE = "DISCRETE"


@dataclass(frozen=True)
class BackendCapabilities:
    procedures: frozenset[str]
    time_model: TimeModel
    step: float | None = None
    directions: Mapping[str, ApproxDir] = field(default_factory=dict)
    share_safe: bool = False

    def __post_init__(self):
        unknown = set(self.procedures) - PROCEDURES
        if unknown:
            raise ValueError(f"unknown procedure tags {sorted(unknown)}")
        if "reach" in self.procedures and "make_box" not in self.procedures:
            raise ValueError("a backend with reach must provide make_box")
        if self.time_model is TimeModel.DISCRETE and not (self.step and self.step > 0):
            raise ValueError("discrete backends need a positive step")

    def missing(self, required) -> list[str]:
        return sorted(set(required) - self.procedures)


class Backend(abc.ABC):
    """Optional base class providing the shared plumbing.

    Subclasses set ``caps``, ``primitives``, ``times`` (real-time instants,
    ascending, spanning ``[t0, tf]``) and ``name``.
    """

    name: str = "backend"
    caps: BackendCapabilities
    primitives: Any
    membership_tol: float = 0.0
    leaf_complements_only: bool = False

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def tf(self) -> float:
        return float(self.times[-1])

    def check_owner(self, *sets) -> None:
        for s in sets:
            if getattr(s, "owner", None) is not self:
                raise BackendMismatch(f"set {type(s).__name__} does not belong to backend {self.name}")

    @abc.abstractmethod
    def full(self, t=None): ...

    @abc.abstractmethod
    def empty_set(self, t=None): ...

    @abc.abstractmethod
    def complement(self, a): ...

    @abc.abstractmethod
    def intersect(self, a, b): ...

    @abc.abstractmethod
    def union(self, a, b): ...

    @abc.abstractmethod
    def empty(self, s, t=None) -> bool: ...

    @abc.abstractmethod
    def member(self, s, z, t) -> bool: ...

    def stats(self, s) -> dict:
        return {}


def thread_cap() -> int:
    """Worker count from ``TLTC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("TLTC_THREADS", "1")))
    except ValueError:
        return 1
