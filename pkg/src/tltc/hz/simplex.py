"""Phase-1 simplex for box-bounded equality systems.

Decides whether ``M x = r`` has a solution with ``x`` in ``[-1, 1]^n``.
Variables are shifted to ``y = x + 1`` in ``[0, 2]`` and handled by the
bounded-variable simplex method (nonbasic variables sit at either bound),
with one artificial per row.

Pricing starts with Dantzig's rule (largest reduced cost), which needs far
fewer pivots on the wide systems reachability produces. After
``DEGENERATE_RUN`` consecutive degenerate pivots the solver switches to
Bland's rule for good: smallest eligible index enters, ratio ties go to the
smallest basic index. Bland's rule cannot cycle, so termination is
guaranteed either way; ``bland=True`` uses it from the first pivot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tltc.errors import NumericalError

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGENERATE_RUN = 50
UPPER = 2.0


@dataclass
class LpResult:
    feasible: bool
    x: np.ndarray | None
    infeasibility: float
    iterations: int


def box_feasible(M, r, tol: float = FEAS_TOL, max_iter: int | None = None,
                 bland: bool = False) -> LpResult:
    """Phase-1 feasibility of ``{x in [-1,1]^n : M x = r}``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    r = np.asarray(r, dtype=float).reshape(-1)
    m, n = M.shape
    if m == 0:
        return LpResult(True, np.zeros(n), 0.0, 0)
    if r.size != m:
        raise ValueError(f"{m} rows but right-hand side of length {r.size}")
    # y = x + 1 in [0, 2]; start with every y at 0
    rhs = r + M.sum(axis=1)
    flip = rhs < 0
    T = np.where(flip[:, None], -M, M)
    xb = np.abs(rhs)
    # basis[i] >= n marks the artificial of row i
    basis = np.arange(n, n + m)
    at_upper = np.zeros(n, dtype=bool)
    in_basis = np.zeros(n, dtype=bool)
    # reduced costs of the structural columns for the objective sum(artificials)
    d = -T.sum(axis=0)
    max_iter = max_iter or 50 * (m + n) + 1000
    it = 0
    degenerate = 0
    while True:
        elig = (~in_basis) & (((~at_upper) & (d < -PIVOT_TOL)) | (at_upper & (d > PIVOT_TOL)))
        cand = np.flatnonzero(elig)
        if cand.size == 0:
            break
        if it >= max_iter:
            raise NumericalError(f"simplex did not terminate in {max_iter} iterations")
        it += 1
        if bland:
            j = int(cand[0])
        else:
            j = int(cand[np.argmax(np.abs(d[cand]))])
        direction = -1.0 if at_upper[j] else 1.0
        alpha = direction * T[:, j]
        # every basic variable has lower bound 0; structurals also have UPPER
        ub = np.where(basis < n, UPPER, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            dec = np.where(alpha > PIVOT_TOL, xb / alpha, np.inf)
            inc = np.where(alpha < -PIVOT_TOL, (ub - xb) / -alpha, np.inf)
        ratios = np.maximum(np.minimum(dec, inc), 0.0)
        theta = float(ratios.min())
        degenerate = degenerate + 1 if theta <= PIVOT_TOL else 0
        bland = bland or degenerate >= DEGENERATE_RUN
        if UPPER <= theta:
            # bound flip, no basis change
            xb = xb - UPPER * alpha
            at_upper[j] = not at_upper[j]
            continue
        ties = np.flatnonzero(ratios <= theta + 1e-12)
        row = int(ties[np.argmin(basis[ties])])
        leave_upper = bool(inc[row] <= dec[row])
        xb = xb - theta * alpha
        entering_value = UPPER - theta if at_upper[j] else theta
        piv = T[row, j]
        T[row] /= piv
        col = T[:, j].copy()
        col[row] = 0.0
        T -= np.outer(col, T[row])
        d = d - d[j] * T[row]
        old = int(basis[row])
        if old < n:
            in_basis[old] = False
            at_upper[old] = leave_upper
        basis[row] = j
        in_basis[j] = True
        at_upper[j] = False
        xb[row] = entering_value
    infeas = float(xb[basis >= n].sum())
    feasible = infeas <= tol
    y = np.where(at_upper, UPPER, 0.0)
    y[basis[basis < n]] = xb[basis < n]
    return LpResult(feasible, y - 1.0 if feasible else None, infeas, it)
