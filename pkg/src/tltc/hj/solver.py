"""Explicit level-set integration of the reach and avoid HJB equations.

Time runs backwards: ``t' = tf - t`` is the remaining horizon and every
solve starts from the terminal data at ``t' = 0``. With
``H(z, p) = min_u p . f`` (or ``max_u``) the value function obeys
``dV/dt' = H(z, grad V)``; an explicit step uses central gradients with
Lax-Friedrichs dissipation,

    V <- V + dt * (H(z, p_avg) + sum_i alpha_i(z) * (p_i^+ - p_i^-) / 2)

which is monotone for ``dt * sum_i max alpha_i / dx_i <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tltc.errors import CflViolation, NumericalError
from tltc.hj.dynamics import MODES, HjDynamics
from tltc.hj.levelset import Grid, LevelSet

MAX_DENSE_STEPS = 1000
DECIMATED_SLICES = 256


def one_sided(V: np.ndarray, axis: int, dx: float, periodic: bool = False):
    """Backward and forward differences with linear-extrapolation ghosts."""
    if periodic:
        fwd = (np.roll(V, -1, axis) - V) / dx
        return np.roll(fwd, 1, axis), fwd
    d = np.diff(V, axis=axis) / dx
    first = np.take(d, [0], axis=axis)
    last = np.take(d, [-1], axis=axis)
    return np.concatenate([first, d], axis=axis), np.concatenate([d, last], axis=axis)


def max_rates(grid: Grid, dyn: HjDynamics) -> np.ndarray:
    alpha = dyn.dissipation(grid.mesh)
    return np.array([float(np.max(a)) for a in alpha])


def cfl_number(grid: Grid, dyn: HjDynamics, dt: float) -> float:
    return float(dt * np.sum(max_rates(grid, dyn) / grid.spacing))


def hamiltonian_rate(V: np.ndarray, grid: Grid, dyn: HjDynamics, mode: str) -> np.ndarray:
    """Numerical ``dV/dt'`` (Hamiltonian plus dissipation) on one slice."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    minus, plus = zip(*(one_sided(V, i, grid.spacing[i], grid.periodic[i]) for i in range(grid.ndim)))
    p_avg = [0.5 * (a + b) for a, b in zip(minus, plus)]
    alpha = dyn.dissipation(grid.mesh)
    rate = dyn.hamiltonian(grid.mesh, p_avg, mode)
    for a, pm, pp in zip(alpha, minus, plus):
        rate = rate + 0.5 * a * (pp - pm)
    return rate


def step_hjb(V: np.ndarray, grid: Grid, dyn: HjDynamics, mode: str, dt: float,
             cfl_limit: float = 1.0) -> np.ndarray:
    """Advance one slice by ``dt`` of remaining time.

    Raises:
        CflViolation: ``dt`` exceeds the stability bound ``cfl_limit``.
    """
    c = cfl_number(grid, dyn, dt)
    if c > cfl_limit * (1 + 1e-12):
        raise CflViolation(f"CFL number {c:.4g} exceeds {cfl_limit}")
    return V + dt * hamiltonian_rate(V, grid, dyn, mode)


@dataclass
class HjConfig:
    grid: Grid
    dynamics: HjDynamics
    t0: float = 0.0
    tf: float = 1.0
    cfl: float = 0.5
    # stored steps: every step up to MAX_DENSE_STEPS, else this many slices
    max_slices: int = DECIMATED_SLICES
    store_every: int | None = None
    _plan: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.tf > self.t0:
            raise ValueError("horizon needs tf > t0")
        if not 0 < self.cfl <= 1:
            raise ValueError("CFL number must lie in (0, 1]")

    @property
    def horizon(self) -> float:
        return self.tf - self.t0

    def plan(self):
        """``(n_steps, dt, stored step indices)``."""
        if self._plan is None:
            rate = float(np.sum(max_rates(self.grid, self.dynamics) / self.grid.spacing))
            n = max(1, math.ceil(self.horizon * rate / self.cfl)) if rate > 0 else 1
            dt = self.horizon / n
            if self.store_every:
                stored = np.unique(np.r_[np.arange(0, n + 1, self.store_every), n])
            elif n <= MAX_DENSE_STEPS:
                stored = np.arange(n + 1)
            else:
                stored = np.unique(np.round(np.linspace(0, n, self.max_slices)).astype(int))
            self._plan = (n, dt, stored)
        return self._plan

    @property
    def stored_times(self) -> np.ndarray:
        """Remaining times ``t'`` of the stored slices, ascending from 0."""
        n, dt, stored = self.plan()
        return stored * dt


def _integrate(V0, cfg: HjConfig, mode, clamp):
    n, dt, stored = cfg.plan()
    times = cfg.stored_times
    # nearest stored slice for every integration step
    nearest = np.abs(np.arange(n + 1)[:, None] * dt - times[None, :]).argmin(axis=1)
    out = np.empty((len(stored),) + cfg.grid.shape)
    V = clamp(V0, nearest[0])
    out[0] = V
    k = 1
    for j in range(1, n + 1):
        V = V + dt * hamiltonian_rate(V, cfg.grid, cfg.dynamics, mode)
        V = clamp(V, nearest[j])
        if k < len(stored) and stored[k] == j:
            if not np.all(np.isfinite(V)):
                raise NumericalError(f"non-finite values at t'={j * dt:.4g}")
            out[k] = V
            k += 1
    return out, times


def hj_reach(V_T: LevelSet, V_C: LevelSet, cfg: HjConfig) -> LevelSet:
    """Reach tube: states that can enter the target while staying in the constraint.

    The target is absorbing (``V <- min(V, V_T)``) and the constraint is an
    obstacle (``V <- max(V, V_C)``), applied after every step with the
    operand slices nearest the current remaining time.
    """
    def clamp(V, i):
        return np.maximum(np.minimum(V, V_T.values[0 if V_T.static else i]),
                          V_C.values[0 if V_C.static else i])

    V0 = V_T.values[0]
    out, times = _integrate(V0, cfg, "exists", clamp)
    return LevelSet(out, times, cfg.grid, V_T.owner)


def hj_avoid(V_T: LevelSet, cfg: HjConfig) -> LevelSet:
    """States driven into the target within the window whatever the control does."""
    def clamp(V, i):
        return np.minimum(V, V_T.values[0 if V_T.static else i])

    out, times = _integrate(V_T.values[0], cfg, "forall", clamp)
    return LevelSet(out, times, cfg.grid, V_T.owner)


def hj_always(V_C: LevelSet, cfg: HjConfig) -> LevelSet:
    """Viability tube of the constraint: complement of the avoid set of its complement."""
    A = hj_avoid(V_C.with_values(-V_C.values), cfg)
    return A.with_values(-A.values)
