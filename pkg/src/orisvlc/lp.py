"""Dense two-phase tableau simplex for small linear programs

    minimize c @ x   subject to   A_ub @ x <= b_ub,   x >= 0.

Dantzig pricing with a switch to Bland's rule once the objective stops
improving for ``2 * (rows + cols)`` consecutive pivots, which rules out
cycling on degenerate vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.a_ub = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
        self.b_ub = np.asarray(self.b_ub, dtype=float).ravel()
        if self.a_ub.size == 0:
            self.a_ub = np.zeros((0, len(self.c)))
        if self.a_ub.shape != (len(self.b_ub), len(self.c)):
            raise ValueError(f"shape mismatch: A {self.a_ub.shape}, b {self.b_ub.shape}, c {self.c.shape}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.a_ub))
                and np.all(np.isfinite(self.b_ub))):
            raise ValueError("LP coefficients must be finite")


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    pivots: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray, tol: float):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.pivots = 0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j
        self.pivots += 1

    def run(self, n_cols: int) -> str:
        """Iterate on the objective in the last row over the first ``n_cols``
        columns until optimal or unbounded."""
        T, tol = self.T, self.tol
        m = T.shape[0] - 1
        stall_limit = 2 * (m + n_cols)
        stall = 0
        bland = False
        best = T[-1, -1]
        for _ in range(50 * (m + n_cols) + 1000):
            d = T[-1, :n_cols]
            if bland:
                cand = np.flatnonzero(d < -tol)
                if cand.size == 0:
                    return OPTIMAL
                j = int(cand[0])
            else:
                j = int(np.argmin(d))
                if d[j] >= -tol:
                    return OPTIMAL
            col = T[:m, j]
            pos = col > tol
            if not np.any(pos):
                return UNBOUNDED
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / col[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + tol * max(1.0, abs(rmin)))
            r = int(ties[np.argmin(self.basis[ties])])
            self.pivot(r, j)
            # objective row holds -z; it grows as z falls
            if T[-1, -1] > best + tol * max(1.0, abs(best)):
                best = T[-1, -1]
                stall = 0
            else:
                stall += 1
                if stall > stall_limit:
                    bland = True
        raise RuntimeError("simplex iteration limit reached")


def lp_solve(lp: LinearProgram, tol: float = 1e-9) -> LPResult:
    c, A, b = lp.c, lp.a_ub, lp.b_ub
    m, n = A.shape
    if m == 0:
        if np.any(c < -tol):
            return LPResult(UNBOUNDED)
        x = np.zeros(n)
        return LPResult(OPTIMAL, x, 0.0)

    # row equilibration: rows scaled to unit max coefficient
    scale = np.maximum(np.abs(A).max(axis=1), np.abs(b))
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = b / scale
    sign = np.where(b < 0, -1.0, 1.0)
    art_rows = np.flatnonzero(sign < 0)
    n_art = len(art_rows)
    width = n + m + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A * sign[:, None]
    T[np.arange(m), n + np.arange(m)] = sign
    T[art_rows, n + m + np.arange(n_art)] = 1.0
    T[:m, -1] = b * sign
    basis = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(n_art)
    tab = _Tableau(T, basis, tol)

    if n_art:
        # phase 1: minimise the artificial sum
        T[-1, n + m:width] = 1.0
        T[-1] -= T[art_rows].sum(axis=0)
        tab.run(width)
        if -T[-1, -1] > tol * max(1.0, float(np.abs(b).max())) * 10:
            return LPResult(INFEASIBLE, pivots=tab.pivots)
        # drive leftover artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tab.basis[r] >= n + m:
                row = T[r, :n + m]
                cand = np.flatnonzero(np.abs(row) > tol)
                if cand.size:
                    tab.pivot(r, int(cand[0]))
                else:
                    keep[r] = False
        if not keep.all():
            rows = np.append(np.flatnonzero(keep), m)
            T = T[rows]
            tab.basis = tab.basis[keep]
            m = int(keep.sum())
        # artificial columns are no longer needed
        T = np.concatenate([T[:, :n + len(scale)], T[:, -1:]], axis=1)
        tab.T = T

    # phase 2
    n_std = T.shape[1] - 1
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(tab.basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]
    status = tab.run(n_std)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, pivots=tab.pivots)
    xs = np.zeros(n_std)
    xs[tab.basis] = T[:-1, -1]
    x = np.maximum(xs[:n], 0.0)
    return LPResult(OPTIMAL, x, float(c @ x), tab.pivots)
