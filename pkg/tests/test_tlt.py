from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tltc import formula as F
from tltc import setexpr as S
from tltc import tlt
from tltc.backend import ApproxDir, BackendCapabilities, TimeModel, join
from tltc.errors import (
    BackendMismatch,
    DirectionConflict,
    FragmentError,
    IncompatibleBackend,
    OutOfDomain,
    UnboundProposition,
    UnsoundRealization,
)
from tltc.hj.backend import HjBackend, hj_primitives
from tltc.hj.dynamics import DoubleIntegrator
from tltc.hj.levelset import Grid
from tltc.hj.solver import HjConfig
from tltc.hz.backend import HzBackend, hz_primitives
from tltc.hz.reach import LinearSystem

from test_formula import formulas

SPACE = S.StateSpace.from_bounds(x=(-100, 100), v=(-10, 10))
STRIP = S.box(x=(-50, 50))
M = S.bind(S.bind(S.bind(S.PropositionMap(), "s", STRIP), "p", S.box(x=(0, 20), v=(-2, 2))),
           "q", S.halfspace(10, x=1, v=2))
# r has no face on the 41x41 test grid, so a sampled contradiction has no zero crossing
M = S.bind(M, "r", S.box(x=(1, 21), v=(-2.2, 2.2)))
ATOMS = {"a", "b", "goal", "d", "s_1", "_x"}
FUZZ_MAP = S.PropositionMap({n: S.box(x=(-10, 10)) for n in ATOMS})
E, U, O = ApproxDir.EXACT, ApproxDir.UNDER, ApproxDir.OVER


@pytest.fixture(scope="module")
def hj():
    grid = Grid.from_space(SPACE, [41, 41])
    return HjBackend(SPACE, HjConfig(grid, DoubleIntegrator(), 0.0, 10.0))


@pytest.fixture(scope="module")
def hz():
    sys = LinearSystem.from_continuous([[0, 1], [0, 0]], [[0], [1]], 0.5, [-1], [1])
    return HzBackend(SPACE, sys, 6)


def test_join_half_lattice():
    assert join(E, E) is E
    assert join(E, U) is U and join(U, U) is U
    assert join(E, O) is O
    assert join(U, O) is None
    assert U.flip() is O and E.flip() is E


def test_capabilities_invariants():
    with pytest.raises(ValueError):
        BackendCapabilities(frozenset({"reach"}), TimeModel.CONTINUOUS)
    with pytest.raises(ValueError):
        BackendCapabilities(frozenset({"full"}), TimeModel.DISCRETE, step=0.0)
    with pytest.raises(ValueError):
        BackendCapabilities(frozenset({"teleport"}), TimeModel.CONTINUOUS)


def test_construct_always_shape():
    root = tlt.construct(F.parse("(G s)"), hj_primitives(), M)
    assert root.child.op == "G"
    (leaf,) = root.child.children
    assert leaf.is_leaf and leaf.leaf == STRIP
    assert tlt.validate_tree(root) == []
    assert root.approx is U


def test_construct_rejects_next_outside_fragment():
    with pytest.raises(FragmentError) as exc:
        tlt.construct(F.parse("(and s (X p))"), hj_primitives(), M)
    assert exc.value.subformula == F.parse("(X p)")


def test_construct_unbound_proposition():
    with pytest.raises(UnboundProposition) as exc:
        tlt.construct(F.parse("(U s b)"), hj_primitives(), M)
    assert exc.value.name == "b"


def test_top_is_full_space_leaf():
    root = tlt.construct(F.Top(), hj_primitives(), M)
    assert root.is_leaf and root.leaf == S.FullSpace()


def test_eventually_expands_to_until_top():
    root = tlt.construct(F.parse("(F s)"), hj_primitives(), M)
    assert root.child.op == "U"
    assert root.child.children[0].leaf == S.FullSpace()


def test_hz_primitives_apply_nnf():
    root = tlt.construct(F.parse("(not (and s p))"), hz_primitives(), M)
    assert root.label == F.parse("(or (not s) (not p))")


def _tree_with_leaf_dirs(text, dirs):
    root = tlt.construct(F.parse(text), hj_primitives(), M)
    leaves = [n for n in tlt.walk(root) if n.is_leaf]
    for n, d in zip(leaves, dirs):
        n.approx = d
    return root, leaves


def test_complement_swaps_direction():
    root, _ = _tree_with_leaf_dirs("(not s)", [U])
    assert tlt.approx_direction(root) is O


def test_intersection_of_under_is_under():
    root, _ = _tree_with_leaf_dirs("(and s p)", [U, U])
    assert tlt.approx_direction(root) is U


def test_intersection_of_under_and_over_conflicts():
    root, _ = _tree_with_leaf_dirs("(and s (not p))", [U, U])
    with pytest.raises(DirectionConflict):
        tlt.approx_direction(root)


def test_construct_reports_direction_conflict():
    # (F s) is UNDER, its negation OVER; intersecting them cannot be ordered
    with pytest.raises(DirectionConflict):
        tlt.construct(F.parse("(and (F s) (not (F p)))"), hj_primitives(), M)


DIR_ORDER = {E: 0, U: 1, O: 1}


@pytest.mark.parametrize("text", [
    "(and s (or p q))", "(not (and s (not p)))", "(or (and s p) (not (or q s)))",
    "(U (and s p) (or q s))", "(G (or s (not p)))",
])
def test_direction_fold_is_monotone(text):
    base, leaves = _tree_with_leaf_dirs(text, [E] * 8)
    k = len(leaves)
    assert k <= 4

    def fold(dirs):
        root, _ = _tree_with_leaf_dirs(text, dirs)
        try:
            return tlt.approx_direction(root)
        except DirectionConflict:
            return None

    for dirs in itertools.product([E, U, O], repeat=k):
        out = fold(list(dirs))
        assert out == fold(list(dirs))
        for i, d in enumerate(dirs):
            if d is not E:
                continue
            bumped = list(dirs)
            bumped[i] = U
            after = fold(bumped)
            # making an input less exact never turns OVER into UNDER or back
            if out in (U, O):
                assert after in (out, None)


def test_compat_phi2_rejected_on_hz(hz):
    root = tlt.construct(F.parse("(G (F s))"), hz.primitives, M)
    report = tlt.check_compat(root, hz.caps)
    assert report.verdict == "REJECT"
    bad = [e for e in report.entries if e.verdict == "REJECT"]
    assert [e.formula for e in bad] == ["(G (F s))"]
    assert "approximation soundness" in bad[0].reason
    json.loads(report.dumps())


def test_compat_phi2_passes_on_hj(hj):
    root = tlt.construct(F.parse("(G (F s))"), hj.primitives, M)
    assert tlt.check_compat(root, hj.caps).verdict == "PASS"


def test_compat_phi1_passes_on_hz(hz):
    root = tlt.construct(F.parse("(G s)"), hz.primitives, M)
    assert tlt.check_compat(root, hz.caps).verdict == "PASS"


def test_compat_missing_procedure(hj):
    root = tlt.construct(F.parse("(X s)"), hz_primitives(), M)
    report = tlt.check_compat(root, hj.caps)
    assert report.verdict == "INCOMPATIBLE"
    with pytest.raises(IncompatibleBackend):
        tlt.realize(root, hj)


class Spy:
    """Wraps a backend and counts calls to procedures that do numeric work."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def __getattr__(self, name):
        attr = getattr(self.inner, name)
        if callable(attr) and name in {"reach", "always", "next_pred", "avoid", "make_box", "full",
                                        "intersect", "union", "complement", "empty", "member"}:
            def wrapped(*a, **k):
                self.calls += 1
                return attr(*a, **k)
            return wrapped
        return attr


def test_unsound_realization_does_no_numeric_work(hz):
    root = tlt.construct(F.parse("(G (F s))"), hz.primitives, M)
    spy = Spy(hz)
    with pytest.raises(UnsoundRealization) as exc:
        tlt.realize(root, spy)
    assert spy.calls == 0
    assert "(G (F s))" in str(exc.value)
    assert exc.value.report.verdict == "REJECT"


def test_allow_unsound_override_realizes(hz):
    root = tlt.construct(F.parse("(G (F s))"), hz.primitives, M)
    r = tlt.realize(root, hz, allow_unsound=True)
    assert r.approx is U
    assert r.root.at(hz.N).nb > 0


def test_realize_always_member(hj):
    r = tlt.realize(tlt.construct(F.parse("(G s)"), hj.primitives, M), hj)
    assert tlt.member(r, (0.0, 0.0), 0.0)
    assert np.all(np.diff(r.times) > 0)
    assert r.times[0] == hj.t0 and r.times[-1] == pytest.approx(hj.tf)
    assert r.stats["wall_seconds"] >= 0


def test_member_outside_horizon(hj):
    r = tlt.realize(tlt.construct(F.parse("(G s)"), hj.primitives, M), hj)
    with pytest.raises(OutOfDomain):
        tlt.member(r, (0.0, 0.0), hj.tf + 1)


@pytest.mark.parametrize("backend", ["hj", "hz"])
def test_top_realizes_full_space(backend, request):
    b = request.getfixturevalue(backend)
    r = tlt.realize(tlt.construct(F.Top(), b.primitives, M), b)
    assert tlt.is_satisfiable(r)
    for t in (b.t0, b.tf):
        assert b.member(r.root, (99.0, -9.0), t)


def test_contradiction_is_unsatisfiable_on_grid(hj):
    r = tlt.realize(tlt.construct(F.parse("(and r (not r))"), hj.primitives, M), hj)
    assert not tlt.is_satisfiable(r)


def test_contradiction_keeps_only_the_shared_boundary(hz):
    # both sets are closed, so p and its complement meet on the faces of p
    r = tlt.realize(tlt.construct(F.parse("(and p (not p))"), hz.primitives, M), hz)
    for z in [(0.0, 0.0), (20.0, 1.0), (10.0, 2.0)]:
        assert tlt.member(r, z, 0.0)
    for z in [(10.0, 0.0), (-5.0, 0.0), (10.0, 3.0)]:
        assert not tlt.member(r, z, 0.0)


def test_double_negation_bit_exact(hj):
    a = tlt.realize(tlt.construct(F.parse("(U q s)"), hj.primitives, M), hj).root
    b = tlt.realize(tlt.construct(F.parse("(not (not (U q s)))"), hj.primitives, M), hj).root
    assert np.array_equal(a.values, b.values)


def test_realization_is_deterministic(hj):
    f = F.parse("(and (G s) (U q p))")
    a = tlt.realize(tlt.construct(f, hj.primitives, M), hj).root
    b = tlt.realize(tlt.construct(f, hj.primitives, M), hj).root
    assert np.array_equal(a.values, b.values)


def test_parallel_realization_matches_serial(hj, monkeypatch):
    f = F.parse("(or (G s) (U q p))")
    serial = tlt.realize(tlt.construct(f, hj.primitives, M), hj).root
    monkeypatch.setenv("TLTC_THREADS", "4")
    parallel = tlt.realize(tlt.construct(f, hj.primitives, M), hj).root
    assert np.array_equal(serial.values, parallel.values)


def test_realized_sets_are_cached(hj):
    root = tlt.construct(F.parse("(G s)"), hj.primitives, M)
    first = tlt.realize(root, hj).root
    assert tlt.realize(root, hj).root is first


def test_mixed_backend_operands(hj):
    grid = Grid.from_space(SPACE, [41, 41])
    other = HjBackend(SPACE, HjConfig(grid, DoubleIntegrator(), 0.0, 10.0))
    with pytest.raises(BackendMismatch):
        hj.union(hj.full(), other.full())


def test_satisfiability_coherent_with_grid_scan(hj):
    for text in ("(G s)", "(and r (not r))", "(U q p)"):
        r = tlt.realize(tlt.construct(F.parse(text), hj.primitives, M), hj)
        scan = bool(np.any(r.root.slice_at(hj.tf - hj.t0) <= hj.membership_tol))
        assert tlt.is_satisfiable(r) == scan


def test_satisfiability_coherent_with_lp_witness(hz):
    from tltc.hz.simplex import box_feasible

    for text in ("(G s)", "(and p (not p))"):
        r = tlt.realize(tlt.construct(F.parse(text), hz.primitives, M), hz)
        Z = r.root.at(hz.N)
        if Z.nb:
            continue
        lp = box_feasible(Z.Ac, Z.b) if Z.nc else None
        witness = None if lp is not None and not lp.feasible else Z.Gc @ (lp.x if lp else np.zeros(Z.ng)) + Z.c
        assert tlt.is_satisfiable(r) == (witness is not None)
        if witness is not None:
            assert tlt.member(r, np.clip(witness, SPACE.lower, SPACE.upper), hz.t0)


@settings(max_examples=1000, deadline=None)
@given(formulas(max_leaves=10, allow_next=False))
def test_fuzz_in_fragment_trees_are_valid(f):
    q = hj_primitives()
    try:
        root = tlt.construct(f, q, FUZZ_MAP)
    except DirectionConflict:
        return
    assert tlt.validate_tree(root) == []


@settings(max_examples=1000, deadline=None)
@given(formulas(max_leaves=10, allow_next=False), st.integers(0, 50))
def test_fuzz_next_always_raises_fragment_error(f, where):
    subs = list(F.subformulas(f))
    target = subs[where % len(subs)]

    def wrap(g):
        if g is target:
            return F.Next(g)
        if isinstance(g, (F.Top, F.Prop)):
            return g
        if isinstance(g, F.UNARY_TYPES):
            return type(g)(wrap(g.child))
        return type(g)(wrap(g.left), wrap(g.right))

    with pytest.raises(FragmentError):
        tlt.construct(wrap(f), hj_primitives(), FUZZ_MAP)


def test_validator_flags_broken_alternation():
    root = tlt.construct(F.parse("(and s p)"), hj_primitives(), M)
    root.child.children[0] = root.child
    assert tlt.validate_tree(root)
