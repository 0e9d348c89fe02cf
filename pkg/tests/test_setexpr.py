from __future__ import annotations

import numpy as np
import pytest

from tltc import setexpr as S
from tltc.errors import CycleError, UnboundProposition
from tltc.hj.backend import HjBackend
from tltc.hj.dynamics import DoubleIntegrator
from tltc.hj.levelset import Grid
from tltc.hj.solver import HjConfig
from tltc.hz.backend import HzBackend
from tltc.hz.reach import LinearSystem

SPACE = S.StateSpace.from_bounds(x=(-100, 100), v=(-10, 10))


@pytest.fixture(scope="module")
def hj():
    grid = Grid.from_space(SPACE, [41, 21])
    return HjBackend(SPACE, HjConfig(grid, DoubleIntegrator(), 0.0, 4.0))


@pytest.fixture(scope="module")
def hz():
    sys = LinearSystem.from_continuous([[0, 1], [0, 0]], [[0], [1]], 0.5, [-1], [1])
    return HzBackend(SPACE, sys, 8)


class Recorder:
    """Backend stub that records the procedure calls evaluate makes."""

    leaf_complements_only = False

    def __init__(self):
        self.calls = []

    def _rec(self, name, *args):
        self.calls.append((name, *args))
        return (name, *args)

    def full(self, t=None):
        return self._rec("full")

    def empty_set(self, t=None):
        return self._rec("empty_set")

    def make_box(self, box, t=None):
        return self._rec("make_box", box.limits(SPACE, t or 0.0))

    def make_halfspace(self, hs, t=None):
        return self._rec("make_halfspace")

    def complement(self, a):
        return self._rec("complement", a)

    def union(self, a, b):
        return self._rec("union", a, b)

    def intersect(self, a, b):
        return self._rec("intersect", a, b)


def test_state_space_validation():
    with pytest.raises(ValueError):
        S.StateSpace.from_bounds(x=(1, 1))
    with pytest.raises(ValueError):
        S.StateSpace((S.Axis("x", 0, 1), S.Axis("x", 0, 2)))
    assert SPACE.ndim == 2 and SPACE.index("v") == 1


def test_bind_adds_entry():
    goal = S.box(x=((40, 16), None), y=(None, 0))
    m = S.bind(S.PropositionMap(), "goal", goal)
    assert "goal" in m and len(m.bindings) == 1
    assert m.resolve("goal") == goal


def test_bind_self_reference_is_a_cycle():
    with pytest.raises(CycleError):
        S.bind(S.PropositionMap(), "a", S.Ref("a"))


def test_bind_indirect_cycle():
    m = S.bind(S.PropositionMap(), "a", S.Ref("b"))
    with pytest.raises(CycleError):
        S.bind(m, "b", S.union(S.FullSpace(), S.Ref("a")))


def test_bind_shadowing():
    m = S.bind(S.bind(S.PropositionMap(), "p", S.FullSpace()), "p", S.EmptySet())
    assert m.resolve("p") == S.EmptySet()


def test_unbound_proposition():
    with pytest.raises(UnboundProposition) as exc:
        S.PropositionMap().resolve("q")
    assert exc.value.name == "q"


def test_halfspace_needs_nonzero_normal():
    with pytest.raises(ValueError):
        S.halfspace(1.0, x=0.0)


def test_time_varying_box_instantiation():
    d = S.box(x=((0, 16), (40, 16)), y=(None, 0))
    space = S.StateSpace.from_bounds(x=(-40, 260), y=(-4, 4))
    lo, hi = d.limits(space, 2.0)
    assert lo[0] == 32 and hi[0] == 72
    assert lo[1] == -np.inf and hi[1] == 0
    assert S.is_time_varying(d)


def test_evaluate_time_varying_box_at_instant():
    rec = Recorder()
    space_box = S.box(x=((0, 16), (40, 16)))
    S.evaluate(space_box, rec, t=2.0)
    (name, (lo, hi)), = rec.calls
    assert name == "make_box" and lo[0] == 32 and hi[0] == 72


def test_evaluate_maps_structure_onto_procedures():
    rec = Recorder()
    m = S.bind(S.PropositionMap(), "a", S.box(x=(0, 1)))
    S.evaluate(S.intersection(S.Ref("a"), S.Complement(S.union(S.FullSpace(), S.halfspace(0, v=1)))), rec, m)
    assert [c[0] for c in rec.calls] == ["make_box", "full", "make_halfspace", "union", "complement", "intersect"]


def test_check_bounds_detects_crossing_bounds():
    shrinking = S.box(x=((0, 1), (10, -1)))
    S.check_bounds(shrinking, 0, 4)
    with pytest.raises(ValueError):
        S.check_bounds(shrinking, 0, 6)


def test_push_complements_moves_negation_to_leaves():
    a, b = S.box(x=(0, 1)), S.halfspace(2, v=1)
    pushed = S.push_complements(S.Complement(S.union(a, S.Complement(b))), S.PropositionMap())
    assert pushed == S.Intersection((S.Complement(a), b))
    assert S.push_complements(S.Complement(S.FullSpace()), S.PropositionMap()) == S.EmptySet()


def test_json_round_trip():
    e = S.union(S.box(x=((0, 16), (40, 16)), y=(None, 0)), S.Complement(S.Ref("p")),
                S.intersection(S.halfspace(3, x=1, y=-2), S.FullSpace(), S.EmptySet()))
    assert S.from_json(S.to_json(e)) == e


def test_json_omitted_bounds_default_to_space_extent():
    e = S.from_json({"kind": "box", "bounds": {"y": {"hi": 0}}})
    space = S.StateSpace.from_bounds(x=(-40, 260), y=(-4, 4))
    lo, hi = e.limits(space, 0.0, clip=True)
    assert lo.tolist() == [-40, -4] and hi.tolist() == [260, 0]


def test_hj_strip_level_set(hj):
    V = S.evaluate(S.box(x=(-50, 50)), hj).values[0]
    xs = hj.grid.coords[0]
    assert np.allclose(V, np.abs(xs)[:, None] - 50)


def test_complement_of_full_space_is_empty(hj, hz):
    for b in (hj, hz):
        s = S.evaluate(S.Complement(S.FullSpace()), b)
        assert b.empty(s, 0.0)


def test_hj_de_morgan_bit_exact(hj):
    a, b = S.box(x=(-50, 10)), S.halfspace(3, x=0.1, v=1)
    lhs = S.evaluate(S.Complement(S.union(a, b)), hj).values
    rhs = S.evaluate(S.intersection(S.Complement(a), S.Complement(b)), hj).values
    assert np.array_equal(lhs, rhs)


def test_evaluation_is_pure(hj):
    e = S.union(S.box(x=(-50, 10)), S.halfspace(3, x=0.1, v=1))
    assert np.array_equal(S.evaluate(e, hj).values, S.evaluate(e, hj).values)


@pytest.mark.parametrize("backend", ["hj", "hz"])
def test_union_membership_on_samples(backend, request):
    b = request.getfixturevalue(backend)
    rng = np.random.default_rng(3)
    A, B = S.box(x=(-60, -10), v=(-5, 5)), S.box(x=(0, 70), v=(-2, 8))
    sa, sb, su = S.evaluate(A, b), S.evaluate(B, b), S.evaluate(S.union(A, B), b)
    pts = rng.uniform(SPACE.lower, SPACE.upper, size=(200, 2))
    for z in pts:
        assert b.member(su, z, 0.0) == (b.member(sa, z, 0.0) or b.member(sb, z, 0.0))
