"""Emptiness and membership for hybrid zonotopes.

Both reduce to linear feasibility for each assignment of the binary
factors. The LP relaxation (binaries in ``[-1, 1]``) is solved first: if it
is infeasible the set is empty for every assignment, and if its solution
happens to put every binary on a vertex it is already a witness.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from tltc.backend import thread_cap
from tltc.errors import BinaryCapExceeded, DimensionMismatch
from tltc.hz.simplex import FEAS_TOL, box_feasible
from tltc.hz.zonotope import HybridZonotope

BINARY_CAP = 20


def _system(Z: HybridZonotope, x=None):
    """``(Mc, Mb, r)`` with ``Mc xc + Mb xb = r`` encoding the question."""
    Mc, Mb, r = Z.Ac, Z.Ab, Z.b
    if x is not None:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != Z.n:
            raise DimensionMismatch(f"point of dimension {x.size} for a {Z.n}-dimensional set")
        Mc = np.vstack([Mc, Z.Gc])
        Mb = np.vstack([Mb, Z.Gb])
        r = np.r_[r, x - Z.c]
    return Mc, Mb, r


def _feasible(Z: HybridZonotope, x, cap: int, tol: float) -> bool:
    Mc, Mb, r = _system(Z, x)
    nb = Mb.shape[1]
    relaxed = box_feasible(np.hstack([Mc, Mb]), r, tol)
    if not relaxed.feasible:
        return False
    if nb == 0:
        return True
    xb = relaxed.x[Mc.shape[1]:]
    if np.all(np.abs(np.abs(xb) - 1.0) <= 1e-9):
        return True
    if nb > cap:
        raise BinaryCapExceeded(f"{nb} binary factors exceed the enumeration cap of {cap}")

    def check(assign):
        return box_feasible(Mc, r - Mb @ np.asarray(assign), tol).feasible

    assignments = itertools.product((-1.0, 1.0), repeat=nb)
    workers = thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return any(pool.map(check, assignments))
    return any(check(a) for a in assignments)


def hz_empty(Z: HybridZonotope, cap: int = BINARY_CAP, tol: float = FEAS_TOL) -> bool:
    """True iff no binary assignment admits feasible continuous factors.

    Raises:
        BinaryCapExceeded: enumeration would need more than ``cap`` binaries.
    """
    return not _feasible(Z, None, cap, tol)


def hz_member(Z: HybridZonotope, x, cap: int = BINARY_CAP, tol: float = FEAS_TOL) -> bool:
    return _feasible(Z, x, cap, tol)
