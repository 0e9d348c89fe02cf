"""On-disk format for level-set results and CSV slices."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from tltc.errors import OutOfDomain
from tltc.hj.levelset import MEMBERSHIP_TOL, Grid, LevelSet, interpolate


def write_levelset(ls: LevelSet, out: Path, t0: float, tf: float) -> dict:
    """Write ``header.json`` and ``values.bin`` (time-major, real time ascending)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    g = ls.grid
    values = np.ascontiguousarray(ls.expanded()[::-1], dtype="<f8")
    header = {
        "backend": "hj",
        "axes": list(g.names),
        "bounds": [[lo, hi] for lo, hi in zip(g.lower, g.upper)],
        "shape": [len(ls.times), *g.shape],
        "times": [float(tf - tp) for tp in ls.times[::-1]],
        "order": "C",
        "dtype": "f64-le",
        "t0": float(t0),
        "tf": float(tf),
    }
    (out / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    (out / "values.bin").write_bytes(values.tobytes())
    return header


class StoredLevelSet:
    """Read-only view of a written level-set result."""

    def __init__(self, path: Path):
        path = Path(path)
        self.header = json.loads((path / "header.json").read_text())
        h = self.header
        self.grid = Grid(tuple(h["axes"]), tuple(b[0] for b in h["bounds"]),
                         tuple(b[1] for b in h["bounds"]), tuple(h["shape"][1:]))
        self.times = np.asarray(h["times"], dtype=float)
        self.values = np.memmap(path / "values.bin", dtype="<f8", mode="r", shape=tuple(h["shape"]))

    def slice_at(self, t: float) -> tuple[float, np.ndarray]:
        if not (self.times[0] - 1e-9 <= t <= self.times[-1] + 1e-9):
            raise OutOfDomain(f"time {t} outside [{self.times[0]}, {self.times[-1]}]")
        i = int(np.argmin(np.abs(self.times - t)))
        return float(self.times[i]), np.asarray(self.values[i])

    def value(self, z, t: float) -> float:
        return interpolate(self.slice_at(t)[1], self.grid, z)

    def member(self, z, t: float) -> bool:
        return self.value(z, t) <= MEMBERSHIP_TOL

    def section(self, t: float, axes: list[str], fix: dict[str, float]):
        """Values on the grid of ``axes`` with the other axes interpolated at ``fix``.

        Returns ``(stored time, coordinate arrays, values)``.
        """
        ts, V = self.slice_at(t)
        names = self.grid.names
        for a in axes:
            if a not in names:
                raise KeyError(f"unknown axis {a!r}")
        for a in fix:
            if a not in names or a in axes:
                raise KeyError(f"cannot fix axis {a!r}")
        rest = [a for a in names if a not in axes]
        missing = [a for a in rest if a not in fix]
        if missing:
            raise KeyError(f"no value fixed for axes {missing}")
        # interpolate fixed axes from the last to keep indices stable
        for a in sorted(rest, key=names.index, reverse=True):
            d = names.index(a)
            lo, h, n = self.grid.lower[d], self.grid.spacing[d], self.grid.counts[d]
            x = fix[a]
            if not lo - 1e-9 <= x <= self.grid.upper[d] + 1e-9:
                raise OutOfDomain(f"{a}={x} outside grid bounds")
            pos = (x - lo) / h
            i = int(np.clip(np.floor(pos), 0, n - 2))
            w = float(np.clip(pos - i, 0.0, 1.0))
            V = (1 - w) * np.take(V, i, axis=d) + w * np.take(V, i + 1, axis=d)
        kept = [a for a in names if a in axes]
        order = [kept.index(a) for a in axes]
        V = np.transpose(V, order)
        coords = [self.grid.coords[names.index(a)] for a in axes]
        return ts, coords, V
