from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tltc import setexpr as S
from tltc.errors import CflViolation, OutOfDomain, ShapeMismatch
from tltc.hj.backend import HjBackend
from tltc.hj.dynamics import Bicycle, DoubleIntegrator
from tltc.hj.levelset import (
    Grid,
    LevelSet,
    box_sdf,
    interpolate,
    ls_complement,
    ls_intersect,
    ls_union,
)
from tltc.hj.solver import HjConfig, hamiltonian_rate, step_hjb

SPACE = S.StateSpace.from_bounds(x=(-100, 100), v=(-10, 10))
STRIP = S.box(x=(-50, 50))


def kernel(x, v):
    """Viability kernel of |x| <= 50 for x'' = u, |u| <= 1 (horizon longer than any braking time)."""
    return (x + np.maximum(v, 0) ** 2 / 2 <= 50) & (x - np.minimum(v, 0) ** 2 / 2 >= -50)


def backend(n, tf=40.0, **kw):
    return HjBackend(SPACE, HjConfig(Grid.from_space(SPACE, [n, n]), DoubleIntegrator(), 0.0, tf, **kw))


def always(b, expr):
    c = b.make_box(expr)
    return b.complement(b.avoid(b.complement(c)))


@pytest.fixture(scope="module")
def di91():
    b = backend(91)
    return b, always(b, STRIP)


def test_box_sdf_strip():
    g = Grid.from_space(SPACE, [41, 21])
    V = box_sdf(g, np.array([-50, -np.inf]), np.array([50, np.inf]))
    assert V[10, 0] == 0.0 and V[20, 7] == -50.0 and V[0, 3] == 50.0


def test_box_sdf_corner_distance():
    g = Grid.from_space(SPACE, [41, 21])
    V = box_sdf(g, np.array([-50, -5]), np.array([50, 5]))
    # (-100, -10) is 50 along x and 5 along v from the corner
    assert V[0, 0] == pytest.approx(np.hypot(50, 5))
    assert V[20, 10] == -5.0


def test_level_set_algebra_examples():
    g = Grid.from_space(SPACE, [5, 5])
    a = LevelSet(np.arange(25.0).reshape(1, 5, 5) - 12, np.array([0.0]), g)
    b = a.with_values(-a.values[:, ::-1])
    assert np.array_equal(ls_union(a, b).values, np.minimum(a.values, b.values))
    assert np.array_equal(ls_intersect(a, b).values, np.maximum(a.values, b.values))
    assert np.array_equal(ls_complement(a).values, -a.values)


def test_algebra_rejects_other_grid():
    g1 = Grid.from_space(SPACE, [5, 5])
    g2 = Grid.from_space(SPACE, [5, 7])
    with pytest.raises(ShapeMismatch):
        ls_union(LevelSet(np.zeros((1, 5, 5)), np.array([0.0]), g1),
                 LevelSet(np.zeros((1, 5, 7)), np.array([0.0]), g2))


GRID_VALUES = arrays(np.float64, (1, 91, 91), elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=50, deadline=None)
@given(GRID_VALUES, GRID_VALUES, GRID_VALUES)
def test_level_set_laws_bit_exact(va, vb, vc):
    g = Grid.from_space(SPACE, [91, 91])
    t = np.array([0.0])
    a, b, c = (LevelSet(v, t, g) for v in (va, vb, vc))
    eq = np.array_equal
    assert eq(ls_complement(ls_complement(a)).values, a.values)
    assert eq(ls_complement(ls_union(a, b)).values,
              ls_intersect(ls_complement(a), ls_complement(b)).values)
    assert eq(ls_union(a, b).values, ls_union(b, a).values)
    assert eq(ls_intersect(a, ls_intersect(b, c)).values, ls_intersect(ls_intersect(a, b), c).values)
    assert eq(ls_union(a, ls_intersect(b, c)).values,
              ls_intersect(ls_union(a, b), ls_union(a, c)).values)


def test_double_integrator_hamiltonian():
    dyn = DoubleIntegrator()
    z, p = (np.array(0.0), np.array(2.0)), (np.array(1.0), np.array(1.0))
    assert float(dyn.hamiltonian(z, p, "exists")) == 1.0
    assert float(dyn.hamiltonian(z, p, "forall")) == 3.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10), st.floats(-10, 10))
def test_hamiltonian_matches_control_sampling(px, pv, x, v):
    dyn = DoubleIntegrator()
    us = np.linspace(-1, 1, 1001)
    dots = [px * f[0] + pv * f[1] for f in (dyn.f((x, v), (u,)) for u in us)]
    z, p = (np.array(x), np.array(v)), (np.array(px), np.array(pv))
    assert float(dyn.hamiltonian(z, p, "exists")) == pytest.approx(min(dots), abs=1e-9)
    assert float(dyn.hamiltonian(z, p, "forall")) == pytest.approx(max(dots), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4),
       st.lists(st.floats(-20, 20), min_size=4, max_size=4))
def test_bicycle_hamiltonian_matches_control_sampling(p, z):
    dyn = Bicycle()
    zz = tuple(np.array(c) for c in (z[0], z[1], np.clip(z[2], -1, 1), abs(z[3]) + 1))
    pp = tuple(np.array(c) for c in p)
    dots = []
    for a in np.linspace(dyn.u_lo[0], dyn.u_hi[0], 41):
        for d in np.linspace(dyn.u_lo[1], dyn.u_hi[1], 41):
            f = dyn.f(zz, (a, d))
            dots.append(sum(float(pi * fi) for pi, fi in zip(pp, f)))
    assert float(dyn.hamiltonian(zz, pp, "exists")) == pytest.approx(min(dots), abs=1e-6)
    assert float(dyn.hamiltonian(zz, pp, "forall")) == pytest.approx(max(dots), abs=1e-6)


def test_constant_value_is_stationary():
    g = Grid.from_space(SPACE, [21, 21])
    V = np.full(g.shape, 3.5)
    for mode in ("exists", "forall"):
        assert np.array_equal(step_hjb(V, g, DoubleIntegrator(), mode, 0.05), V)


def test_cfl_violation():
    g = Grid.from_space(SPACE, [21, 21])
    with pytest.raises(CflViolation):
        step_hjb(np.zeros(g.shape), g, DoubleIntegrator(), "exists", 10.0)


def test_unknown_mode():
    g = Grid.from_space(SPACE, [5, 5])
    with pytest.raises(ValueError):
        hamiltonian_rate(np.zeros(g.shape), g, DoubleIntegrator(), "sometimes")


def test_storage_plan_dense_and_decimated():
    short = HjConfig(Grid.from_space(SPACE, [41, 41]), DoubleIntegrator(), 0.0, 4.0)
    n, dt, stored = short.plan()
    assert n <= 1000 and len(stored) == n + 1
    long = HjConfig(Grid.from_space(SPACE, [201, 201]), DoubleIntegrator(), 0.0, 100.0)
    n, dt, stored = long.plan()
    assert n > 1000 and len(stored) == 256 and stored[0] == 0 and stored[-1] == n
    assert long.stored_times[-1] == pytest.approx(100.0)


def test_always_matches_kernel(di91):
    b, s = di91
    X, Vv = np.meshgrid(*b.grid.coords, indexing="ij")
    K = kernel(X, Vv)
    got = s.slice_at(40.0) <= b.membership_tol
    in_strip = np.abs(X) <= 50
    assert not np.any(got & ~K)
    assert np.sum(got ^ K) <= 0.05 * np.sum(in_strip)


def test_always_shrinks_with_remaining_time(di91):
    b, s = di91
    members = s.values <= b.membership_tol
    assert np.all(members[1:] <= members[:-1])


def test_always_first_order_convergence():
    X, Vv = np.meshgrid(np.linspace(-99, 99, 199), np.linspace(-9.9, 9.9, 67), indexing="ij")
    pts = np.stack([X.ravel(), Vv.ravel()], 1)
    K = kernel(X, Vv).ravel()
    errs = []
    for n in (31, 61, 121):
        b = backend(n)
        V = always(b, STRIP).slice_at(40.0)
        got = np.array([interpolate(V, b.grid, z) <= b.membership_tol for z in pts])
        errs.append(np.mean(got ^ K))
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[2] > 3.0


@pytest.mark.parametrize("z,expected", [
    ((0, 0), True), ((49.9, 9.9), False), ((49, 5), False),
    ((40, -5), True), ((-45, -5), False), ((30, 7), False),
])
def test_always_membership_examples(di91, z, expected):
    b, s = di91
    assert b.member(s, z, 0.0) == expected == bool(kernel(*z))


def test_reach_from_rest():
    b = backend(81, tf=10.0)
    target = b.make_box(S.box(x=(-5, 5)))
    r = b.reach(target, b.full())
    # from rest, full thrust covers x = T^2 / 2 = 50 in the 10 s window
    assert b.member(r, (-50, 0), 0.0)
    assert not b.member(r, (-60, 0), 0.0)
    assert b.member(r, (0, 0), 10.0)
    assert not b.member(r, (-10, 0), 10.0)


def test_reach_containment_and_monotonicity():
    b = backend(61, tf=10.0)
    T = b.make_box(S.box(x=(-5, 5), v=(-2, 2)))
    C = b.make_box(S.box(x=(-60, 60)))
    r = b.reach(T, C)
    members = r.values <= 0
    assert np.all(members <= (C.values[0] <= 0))
    inside = (T.values[0] <= 0) & (C.values[0] <= 0)
    assert np.all(members[:, inside])
    assert np.all(members[:-1] <= members[1:])


def test_avoid_of_empty_and_full():
    b = backend(31, tf=4.0)
    assert b.empty(b.avoid(b.empty_set()), 0.0)
    full = b.avoid(b.full())
    assert np.all(full.values <= 0)


def test_member_boundary_tolerance():
    b = backend(41, tf=4.0)
    s = b.make_box(STRIP)
    assert b.value(s, (50, 0), 0.0) == 0.0
    assert b.member(s, (50, 0), 0.0)
    assert b.member(s, (50 + 5e-10, 0), 0.0)
    assert not b.member(s, (50 + 1e-8, 0), 0.0)


def test_member_out_of_domain():
    b = backend(21, tf=4.0)
    s = b.make_box(STRIP)
    with pytest.raises(OutOfDomain):
        b.member(s, (101, 0), 0.0)
    with pytest.raises(OutOfDomain):
        b.member(s, (0, 0), 5.0)


def test_time_varying_box_has_one_slice_per_time():
    b = backend(41, tf=4.0)
    s = b.make_box(S.box(x=((0, 10), (20, 10))))
    assert s.values.shape[0] == len(b.tprimes)
    assert b.member(s, (5, 0), 0.0) and not b.member(s, (5, 0), 4.0)
    assert b.member(s, (45, 0), 4.0)


def test_always_eventually_matches_terminal_reach():
    # with an existential control, G F s holds exactly where s is reachable at tf
    b = backend(91)
    s = b.make_box(STRIP)
    ev = b.reach(s, b.full())
    gf = b.complement(b.avoid(b.complement(ev)))
    X, Vv = np.meshgrid(*b.grid.coords, indexing="ij")
    for t in (0.0, 20.0, 23.0, 30.0):
        T = 40.0 - t
        truth = np.abs(X + Vv * T) <= 50 + T ** 2 / 2
        got = gf.slice_at(T) <= b.membership_tol
        # first-order diffusion smears the boundary by about one cell
        assert np.mean(got ^ truth) <= 0.02
