"""Temporal logic trees: construction, static analysis and realization.

A tree alternates set nodes and operator nodes. Leaves are set nodes bound
to a :data:`~tltc.setexpr.SetExpr`; every operator node is backed by a
:class:`PrimitiveSpec` from the :class:`PrimitiveSet` the tree was built
with, which names the backend procedures it calls and the approximation
direction it introduces.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from tltc import formula as F
from tltc import setexpr as S
from tltc.backend import ApproxDir, BackendCapabilities, join, thread_cap
from tltc.errors import (
    DirectionConflict,
    FragmentError,
    IncompatibleBackend,
    OutOfDomain,
    TltcError,
    UnsoundRealization,
)

TEMPORAL_TAGS = frozenset({"U", "X", "F", "G"})


@dataclass(frozen=True)
class PrimitiveSpec:
    """How one connective is operationalized.

    ``apply(backend, *child_sets)`` computes the node set; ``direction`` is
    the output direction given exact inputs. ``accepts_approximate`` is
    indexed by argument position.
    """

    procedures: tuple[str, ...]
    apply: Callable[..., Any]
    direction: ApproxDir = ApproxDir.EXACT
    accepts_approximate: tuple[bool, ...] = (True, True)
    temporal: bool = False


@dataclass(frozen=True)
class PrimitiveSet:
    fragment: F.Fragment
    primitives: Mapping[str, PrimitiveSpec]
    # "derived" expands F p into (U top p); "native" looks up an "F" primitive
    eventually: str = "derived"
    # backends that can only complement set-builder leaves want NNF input
    nnf: bool = False

    def __post_init__(self):
        if "prop" not in self.primitives and "top" not in self.primitives:
            raise ValueError("a primitive set needs at least the atomic primitives")


def boolean_primitives() -> dict[str, PrimitiveSpec]:
    """Exact set-algebra primitives shared by every backend."""
    return {
        "top": PrimitiveSpec(("full",), lambda b: b.full()),
        "prop": PrimitiveSpec((), lambda b: None),
        "not": PrimitiveSpec(("complement",), lambda b, a: b.complement(a)),
        "and": PrimitiveSpec(("intersect",), lambda b, x, y: b.intersect(x, y)),
        "or": PrimitiveSpec(("union",), lambda b, x, y: b.union(x, y)),
    }


def until_primitive(direction=ApproxDir.UNDER, accepts=True) -> PrimitiveSpec:
    return PrimitiveSpec(("reach",), lambda b, c, t: b.reach(t, c), direction,
                         (accepts, accepts), temporal=True)


# -- tree ---------------------------------------------------------------------

@dataclass(eq=False)
class SetNode:
    label: F.Formula
    approx: ApproxDir = ApproxDir.EXACT
    child: OperatorNode | None = None
    leaf: S.SetExpr | None = None
    realized: Any = None
    realized_by: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.child is None


@dataclass(eq=False)
class OperatorNode:
    op: str
    children: list[SetNode]
    spec: PrimitiveSpec


@dataclass
class RealizationResult:
    root: Any
    times: np.ndarray
    approx: ApproxDir
    stats: dict = field(default_factory=dict)
    backend: Any = None


def walk(node: SetNode):
    """Pre-order over set nodes."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if n.child is not None:
            stack.extend(reversed(n.child.children))


# -- construction ---------------------------------------------------------------

def construct(f: F.Formula, q: PrimitiveSet, m: S.PropositionMap | None = None) -> SetNode:
    """Build the tree for ``f`` under the primitives ``q``.

    Raises:
        FragmentError: ``f`` is outside ``q.fragment`` or uses a connective
            ``q`` has no primitive for.
        UnboundProposition: an atom has no binding in ``m``.
        DirectionConflict: a node combines UNDER and OVER children.
    """
    m = m if m is not None else S.PropositionMap()
    bad = F.first_violation(f, q.fragment)
    if bad is not None:
        raise FragmentError(bad, q.fragment)
    if q.nnf:
        f = F.to_nnf(f)
    return _build(f, q, m)


def _build(f, q, m) -> SetNode:
    if isinstance(f, F.Prop):
        return SetNode(label=f, leaf=m.expand(m.resolve(f.name)))
    if isinstance(f, F.Top):
        return SetNode(label=f, leaf=S.FullSpace())
    op = F.tag(f)
    kids = [_build(c, q, m) for c in F.children(f)]
    if op == "F" and q.eventually == "derived":
        op = "U"
        kids = [SetNode(label=F.Top(), leaf=S.FullSpace()), kids[0]]
    spec = q.primitives.get(op)
    if spec is None:
        raise FragmentError(f, q.fragment)
    node = SetNode(label=f, child=OperatorNode(op, kids, spec))
    node.approx = _node_direction(node)
    return node


def _node_direction(node: SetNode) -> ApproxDir:
    opnode = node.child
    d = join(*(c.approx for c in opnode.children))
    if d is None:
        raise DirectionConflict(node.label)
    if opnode.op == "not":
        d = d.flip()
    out = join(opnode.spec.direction, d)
    if out is None:
        raise DirectionConflict(node.label, f"primitive {opnode.op} is {opnode.spec.direction.value}, input is {d.value}")
    return out


def approx_direction(node: SetNode) -> ApproxDir:
    """Recompute directions bottom-up from the leaves' stored directions."""
    if node.is_leaf:
        return node.approx
    for c in node.child.children:
        c.approx = approx_direction(c)
    node.approx = _node_direction(node)
    return node.approx


def validate_tree(node: SetNode) -> list[str]:
    """Structural violations of the set/operator alternation, if any."""
    problems = []

    def visit(n, path):
        if not isinstance(n, SetNode):
            problems.append(f"{path}: expected a set node, got {type(n).__name__}")
            return
        if n.child is None:
            if n.leaf is None:
                problems.append(f"{path}: leaf set node without a set")
            return
        if not isinstance(n.child, OperatorNode):
            problems.append(f"{path}: child of a set node must be an operator node")
            return
        if not n.child.children:
            problems.append(f"{path}: operator node without children")
        for i, c in enumerate(n.child.children):
            visit(c, f"{path}/{n.child.op}[{i}]")

    visit(node, "root")
    return problems


# -- static analysis ---------------------------------------------------------------

def leaf_procedures(s: S.SetExpr) -> set[str]:
    out = set()
    stack = [s]
    while stack:
        e = stack.pop()
        out.add({S.FullSpace: "full", S.EmptySet: "empty_set", S.Box: "make_box",
                 S.Halfspace: "make_halfspace", S.Union_: "union", S.Intersection: "intersect",
                 S.Complement: "complement"}[type(e)])
        stack.extend(S.expr_children(e))
    return out


@dataclass
class CompatEntry:
    formula: str
    required_procs: list[str]
    missing: list[str]
    direction: str
    verdict: str
    reason: str = ""


@dataclass
class CompatReport:
    entries: list[CompatEntry]

    @property
    def verdict(self) -> str:
        verdicts = {e.verdict for e in self.entries}
        for v in ("INCOMPATIBLE", "REJECT"):
            if v in verdicts:
                return v
        return "PASS"

    @property
    def rejected(self) -> list[CompatEntry]:
        return [e for e in self.entries if e.verdict != "PASS"]

    def to_json(self) -> dict:
        return {"verdict": self.verdict,
                "nodes": [vars(e) for e in self.entries]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _approx_temporal_inside(node: SetNode) -> SetNode | None:
    for n in walk(node):
        if n.child is not None and n.child.spec.temporal and n.approx is not ApproxDir.EXACT:
            return n
    return None


def check_compat(node: SetNode, caps: BackendCapabilities | Any) -> CompatReport:
    """Per-node procedure availability and approximation soundness."""
    if not isinstance(caps, BackendCapabilities):
        caps = caps.caps
    entries = []
    for n in walk(node):
        if n.is_leaf:
            req = sorted(leaf_procedures(n.leaf))
        else:
            req = sorted(n.child.spec.procedures)
        missing = caps.missing(req)
        verdict, reason = "PASS", ""
        if missing:
            verdict, reason = "INCOMPATIBLE", f"backend lacks {', '.join(missing)}"
        elif not n.is_leaf:
            spec = n.child.spec
            for i, c in enumerate(n.child.children):
                accepts = spec.accepts_approximate[min(i, len(spec.accepts_approximate) - 1)]
                culprit = None if accepts else _approx_temporal_inside(c)
                if culprit is not None:
                    verdict = "REJECT"
                    reason = (f"approximation soundness: {n.child.op} does not accept an approximate "
                              f"temporal argument, but {F.render(culprit.label)} is {culprit.approx.value}")
                    break
        entries.append(CompatEntry(F.render(n.label), req, missing, n.approx.value, verdict, reason))
    return CompatReport(entries)


# -- realization -------------------------------------------------------------------

def realize(node: SetNode, backend, allow_unsound: bool = False) -> RealizationResult:
    """Compute the root set by post-order calls into ``backend``.

    Raises:
        IncompatibleBackend: a required procedure is missing.
        UnsoundRealization: static analysis rejected the tree and
            ``allow_unsound`` is false. No numeric work happens first.
    """
    report = check_compat(node, backend.caps)
    if report.verdict == "INCOMPATIBLE":
        bad = report.rejected[0]
        raise IncompatibleBackend(f"{bad.formula}: {bad.reason}")
    if report.verdict == "REJECT" and not allow_unsound:
        bad = next(e for e in report.entries if e.verdict == "REJECT")
        raise UnsoundRealization(f"rejected at {bad.formula}: {bad.reason}", report)
    parallel = backend.caps.share_safe and thread_cap() > 1
    start = time.perf_counter()
    with ThreadPoolExecutor(thread_cap()) if parallel else _Serial() as pool:
        root = _realize(node, backend, pool)
    stats = {"wall_seconds": time.perf_counter() - start, **backend.stats(root)}
    return RealizationResult(root, np.asarray(backend.times, dtype=float), node.approx, stats, backend)


class _Serial:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def _realize(node: SetNode, backend, pool):
    if node.realized is not None and node.realized_by == id(backend):
        return node.realized
    try:
        if node.is_leaf:
            out = S.evaluate(node.leaf, backend)
        else:
            kids = node.child.children
            if pool is not None and len(kids) > 1:
                args = list(pool.map(lambda c: _realize(c, backend, None), kids))
            else:
                args = [_realize(c, backend, pool) for c in kids]
            out = node.child.spec.apply(backend, *args)
    except TltcError as e:
        if getattr(e, "provenance", None) is None:
            e.provenance = F.render(node.label)
        raise
    node.realized, node.realized_by = out, id(backend)
    return out


def is_satisfiable(r: RealizationResult, backend=None) -> bool:
    backend = backend or r.backend
    return not backend.empty(r.root, float(r.times[0]))


def member(r: RealizationResult, z, t: float) -> bool:
    if not (r.times[0] - 1e-9 <= t <= r.times[-1] + 1e-9):
        raise OutOfDomain(f"time {t} outside [{r.times[0]}, {r.times[-1]}]")
    return r.backend.member(r.root, z, t)
