"""Continuous-time dynamics with closed-form Hamiltonians.

``hamiltonian(z, p, mode)`` returns ``min_u p . f(z, u)`` for
``mode="exists"`` and ``max_u p . f(z, u)`` for ``mode="forall"``. Arrays in
``z`` and ``p`` broadcast against each other (``z`` is usually a sparse
mesh).
"""

from __future__ import annotations

import abc
import itertools
import math
from typing import Callable, Sequence

import numpy as np

MODES = ("exists", "forall")


class HjDynamics(abc.ABC):
    name: str
    n_z: int
    u_lo: np.ndarray
    u_hi: np.ndarray

    @abc.abstractmethod
    def f(self, z: Sequence[np.ndarray], u: Sequence[float]) -> list[np.ndarray]:
        """Vector field at states ``z`` under the constant control ``u``."""

    @abc.abstractmethod
    def hamiltonian(self, z, p, mode: str) -> np.ndarray: ...

    @abc.abstractmethod
    def dissipation(self, z) -> list:
        """Per-axis bounds ``alpha_i(z) >= max_u |f_i(z, u)|``."""

    def linearization(self):
        """``(A, B)`` for linear systems, else ``None``."""
        return None


class DoubleIntegrator(HjDynamics):
    """``x' = v``, ``v' = u`` with ``|u| <= a_max``."""

    name = "double_integrator"
    n_z = 2

    def __init__(self, a_max: float = 1.0):
        self.a_max = float(a_max)
        self.u_lo = np.array([-self.a_max])
        self.u_hi = np.array([self.a_max])

    def f(self, z, u):
        x, v = z
        return [v + 0.0 * x, np.full(np.broadcast(x, v).shape, float(u[0]))]

    def hamiltonian(self, z, p, mode):
        _, v = z
        px, pv = p
        sign = -1.0 if mode == "exists" else 1.0
        return px * v + sign * self.a_max * np.abs(pv)

    def dissipation(self, z):
        _, v = z
        return [np.abs(v), self.a_max]

    def linearization(self):
        return np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]])


class Bicycle(HjDynamics):
    """Kinematic bicycle on ``[x, y, theta, v]`` with ``u = [a, delta]``.

    The wheelbase and input limits are not fixed by any reference scenario;
    the defaults here are plausible passenger-car values.
    """

    name = "bicycle"
    n_z = 4

    def __init__(self, wheelbase: float = 2.9, a_min: float = -1.0, a_max: float = 1.0,
                 delta_max: float = 0.4):
        self.wheelbase = float(wheelbase)
        self.a_min, self.a_max = float(a_min), float(a_max)
        self.delta_max = float(delta_max)
        self.u_lo = np.array([self.a_min, -self.delta_max])
        self.u_hi = np.array([self.a_max, self.delta_max])

    def f(self, z, u):
        _, _, th, v = z
        a, delta = u
        shape = np.broadcast(*z).shape
        return [np.broadcast_to(v * np.cos(th), shape), np.broadcast_to(v * np.sin(th), shape),
                np.broadcast_to(v * math.tan(delta) / self.wheelbase, shape), np.full(shape, float(a))]

    def hamiltonian(self, z, p, mode):
        _, _, th, v = z
        px, py, pth, pv = p
        drift = px * (v * np.cos(th)) + py * (v * np.sin(th))
        steer = np.abs(pth * v) * (math.tan(self.delta_max) / self.wheelbase)
        if mode == "exists":
            accel = np.where(pv >= 0, pv * self.a_min, pv * self.a_max)
            return drift - steer + accel
        accel = np.where(pv >= 0, pv * self.a_max, pv * self.a_min)
        return drift + steer + accel

    def dissipation(self, z):
        _, _, th, v = z
        return [np.abs(v * np.cos(th)), np.abs(v * np.sin(th)),
                np.abs(v) * math.tan(self.delta_max) / self.wheelbase,
                max(abs(self.a_min), abs(self.a_max))]


class SampledDynamics(HjDynamics):
    """Arbitrary ``f(z, u)`` with the Hamiltonian optimized over a control grid.

    Slower and only as accurate as the control grid, but needs nothing
    beyond the vector field itself.
    """

    def __init__(self, name: str, n_z: int, f: Callable, u_lo, u_hi, samples: int = 11,
                 alpha: Callable | None = None):
        self.name, self.n_z, self._f = name, n_z, f
        self.u_lo, self.u_hi = np.atleast_1d(np.asarray(u_lo, float)), np.atleast_1d(np.asarray(u_hi, float))
        axes = [np.linspace(lo, hi, samples) for lo, hi in zip(self.u_lo, self.u_hi)]
        self.u_grid = [np.array(u) for u in itertools.product(*axes)]
        self._alpha = alpha

    def f(self, z, u):
        return self._f(z, u)

    def hamiltonian(self, z, p, mode):
        best = None
        pick = np.minimum if mode == "exists" else np.maximum
        for u in self.u_grid:
            h = sum(pi * fi for pi, fi in zip(p, self._f(z, u)))
            best = h if best is None else pick(best, h)
        return best

    def dissipation(self, z):
        if self._alpha is not None:
            return self._alpha(z)
        out = None
        for u in self.u_grid:
            mag = [np.abs(fi) for fi in self._f(z, u)]
            out = mag if out is None else [np.maximum(a, b) for a, b in zip(out, mag)]
        return out


def make_dynamics(spec: dict) -> HjDynamics:
    """Build shipped dynamics from a config mapping ``{"name": ..., **params}``."""
    params = {k: v for k, v in spec.items() if k != "name"}
    name = spec.get("name")
    if name == "double_integrator":
        return DoubleIntegrator(**params)
    if name == "bicycle":
        return Bicycle(**params)
    raise ValueError(f"unknown dynamics {name!r}")
