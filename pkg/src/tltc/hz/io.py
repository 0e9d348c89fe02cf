"""On-disk format for hybrid-zonotope results."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from tltc.errors import OutOfDomain
from tltc.hz.query import hz_member
from tltc.hz.zonotope import HybridZonotope


def write_sequence(sets: list[HybridZonotope], out: Path, axes, bounds, dt: float, t0: float) -> dict:
    """Write ``header.json`` and ``result.json`` (one object per remaining step ``k``)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    N = len(sets) - 1
    header = {
        "backend": "hz",
        "axes": list(axes),
        "bounds": [[float(lo), float(hi)] for lo, hi in bounds],
        "dt": float(dt),
        "N": N,
        "t0": float(t0),
        "tf": float(t0 + N * dt),
        "times": [float(t0 + i * dt) for i in range(N + 1)],
    }
    steps = [{"k": k, **Z.to_json()} for k, Z in enumerate(sets)]
    (out / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    (out / "result.json").write_text(json.dumps(steps, sort_keys=True) + "\n")
    return header


class StoredSequence:
    def __init__(self, path: Path):
        path = Path(path)
        self.header = json.loads((path / "header.json").read_text())
        steps = json.loads((path / "result.json").read_text())
        self.sets = {s["k"]: HybridZonotope.from_json(s) for s in steps}
        h = self.header
        self.axes = tuple(h["axes"])
        self.bounds = np.asarray(h["bounds"], dtype=float)
        self.dt, self.N, self.t0, self.tf = h["dt"], h["N"], h["t0"], h["tf"]

    def step_of(self, t: float) -> int:
        if not (self.t0 - 1e-9 <= t <= self.tf + 1e-9):
            raise OutOfDomain(f"time {t} outside [{self.t0}, {self.tf}]")
        return int(np.clip(round((self.tf - t) / self.dt), 0, self.N))

    def member(self, z, t: float) -> bool:
        z = np.asarray(z, dtype=float)
        if z.shape != (len(self.axes),) or np.any(z < self.bounds[:, 0]) or np.any(z > self.bounds[:, 1]):
            raise OutOfDomain(f"state {z.tolist()} outside the state space")
        return hz_member(self.sets[self.step_of(t)], z)

    def section(self, t: float, axes: list[str], fix: dict[str, float], resolution: int = 41):
        """Membership on a ``resolution``-point lattice per named axis."""
        for a in axes:
            if a not in self.axes:
                raise KeyError(f"unknown axis {a!r}")
        rest = [a for a in self.axes if a not in axes]
        bad = [a for a in fix if a not in rest]
        if bad:
            raise KeyError(f"cannot fix axes {bad}")
        missing = [a for a in rest if a not in fix]
        if missing:
            raise KeyError(f"no value fixed for axes {missing}")
        k = self.step_of(t)
        coords = [np.linspace(*self.bounds[self.axes.index(a)], resolution) for a in axes]
        mesh = np.meshgrid(*coords, indexing="ij")
        out = np.zeros(mesh[0].shape)
        for idx in np.ndindex(out.shape):
            z = np.array([fix[a] if a in fix else mesh[axes.index(a)][idx] for a in self.axes])
            out[idx] = float(hz_member(self.sets[k], z))
        return self.tf - k * self.dt, coords, out
