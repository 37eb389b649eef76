"""Dense two-phase revised simplex.

Small and dependency-free apart from numpy.  Used as the reference LP
backend and by the test oracles; the sparse HiGHS backend in
:mod:`mrmc.lp` is the default for sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class SolverError(RuntimeError):
    """Numerical failure, e.g. the iteration cap was hit."""


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]
    duals: Optional[np.ndarray]  # d(objective)/d(rhs) of the min problem
    iterations: int


class _Tableau:
    """Revised simplex state for  min c.x  s.t.  A x = b (b >= 0), x >= 0."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list, tol: float):
        self.A = A
        self.b = b
        self.m, self.n = A.shape
        self.basis = list(basis)
        self.tol = tol
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise SolverError("singular basis") from None
        self.xB = self.Binv @ self.b
        self._since_refactor = 0

    def run(self, c: np.ndarray, allowed: np.ndarray, max_iter: int,
            bland_after: int = 50) -> str:
        degenerate = 0
        tol = self.tol
        while True:
            if self.iterations >= max_iter:
                raise SolverError(f"iteration cap {max_iter} reached")
            y = c[self.basis] @ self.Binv
            reduced = c - y @ self.A
            reduced[self.basis] = 0.0
            reduced[~allowed] = 0.0
            use_bland = degenerate >= bland_after
            if use_bland:
                cand = np.nonzero(reduced < -tol)[0]
                if cand.size == 0:
                    return "optimal"
                j = int(cand[0])
            else:
                j = int(np.argmin(reduced))
                if reduced[j] >= -tol:
                    return "optimal"
            d = self.Binv @ self.A[:, j]
            pos = d > tol
            if not pos.any():
                return "unbounded"
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / d[pos]
            theta = ratios.min()
            ties = np.nonzero(ratios <= theta + tol * max(1.0, abs(theta)))[0]
            if use_bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(np.abs(d[ties]))])
            degenerate = degenerate + 1 if theta <= tol else 0
            self._pivot(r, j, d)
            self.iterations += 1

    def _pivot(self, r: int, j: int, d: np.ndarray):
        piv = d[r]
        theta = self.xB[r] / piv
        self.xB = self.xB - theta * d
        self.xB[r] = theta
        row = self.Binv[r] / piv
        self.Binv = self.Binv - np.outer(d, row)
        self.Binv[r] = row
        self.basis[r] = j
        self._since_refactor += 1
        if self._since_refactor >= 50:
            self.refactor()


def simplex(c: Sequence[float], A: np.ndarray, senses: Sequence[str], b: Sequence[float],
            lower: Optional[Sequence[float]] = None, upper: Optional[Sequence[float]] = None,
            tol: float = 1e-9, max_iter: int = 50_000) -> SimplexResult:
    """Minimize ``c.x`` subject to ``A x (senses) b`` and ``lower <= x <= upper``.

    ``senses`` holds one of ``"<="``, ``">="``, ``"="`` per row.  Lower bounds
    must be finite; upper bounds may be ``inf``.  Duals are reported per
    original row (upper-bound rows are internal and not returned).
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.size)
    b = np.asarray(b, dtype=float)
    nvar = c.size
    lo = np.zeros(nvar) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(nvar, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if not np.isfinite(lo).all():
        raise ValueError("lower bounds must be finite")
    if (hi < lo).any():
        return SimplexResult("infeasible", None, None, None, 0)

    # shift to x' = x - lo >= 0 and add finite upper bounds as rows
    rows = [A]
    rhs = [b - A @ lo]
    sns = list(senses)
    ub_idx = np.nonzero(np.isfinite(hi))[0]
    if ub_idx.size:
        U = np.zeros((ub_idx.size, nvar))
        U[np.arange(ub_idx.size), ub_idx] = 1.0
        rows.append(U)
        rhs.append(hi[ub_idx] - lo[ub_idx])
        sns += ["<="] * ub_idx.size
    M = np.vstack(rows)
    rhs = np.concatenate(rhs)
    m = M.shape[0]
    n_orig = len(senses)

    sign = np.ones(m)
    for i, s in enumerate(sns):
        if s not in ("<=", ">=", "="):
            raise ValueError(f"unknown relation {s!r}")
    n_slack = sum(1 for s in sns if s != "=")
    S = np.zeros((m, n_slack))
    k = 0
    slack_of_row = [-1] * m
    for i, s in enumerate(sns):
        if s == "<=":
            S[i, k] = 1.0
        elif s == ">=":
            S[i, k] = -1.0
        else:
            continue
        slack_of_row[i] = nvar + k
        k += 1
    full = np.hstack([M, S])
    for i in range(m):
        if rhs[i] < 0:
            full[i] *= -1
            rhs[i] *= -1
            sign[i] = -1.0

    # artificials only where no slack can start basic
    basis = []
    art_rows = []
    for i in range(m):
        j = slack_of_row[i]
        if j >= 0 and full[i, j] > 0:
            basis.append(j)
        else:
            basis.append(-1)
            art_rows.append(i)
    n_struct = full.shape[1]
    Art = np.zeros((m, len(art_rows)))
    for k, i in enumerate(art_rows):
        Art[i, k] = 1.0
        basis[i] = n_struct + k
    T = np.hstack([full, Art])
    ntot = T.shape[1]
    is_art = np.zeros(ntot, dtype=bool)
    is_art[n_struct:] = True

    tab = _Tableau(T, rhs, basis, tol)
    if art_rows:
        c1 = np.zeros(ntot)
        c1[is_art] = 1.0
        status = tab.run(c1, np.ones(ntot, dtype=bool), max_iter)
        tab.refactor()
        infeas = float(tab.xB[is_art[tab.basis]].sum())
        if infeas > 1e-7 * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            return SimplexResult("infeasible", None, None, None, tab.iterations)
        # drive zero-level artificials out of the basis where possible
        for r in range(m):
            if not is_art[tab.basis[r]]:
                continue
            row = tab.Binv[r] @ T
            row[is_art] = 0.0
            row[tab.basis] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-9:
                d = tab.Binv @ T[:, j]
                tab._pivot(r, j, d)
        tab.refactor()

    c2 = np.zeros(ntot)
    c2[:nvar] = c
    status = tab.run(c2, ~is_art, max_iter)
    if status == "unbounded":
        return SimplexResult("unbounded", None, None, None, tab.iterations)
    tab.refactor()
    x_all = np.zeros(ntot)
    x_all[tab.basis] = tab.xB
    x = lo + np.maximum(x_all[:nvar], 0.0)
    y = c2[tab.basis] @ tab.Binv
    duals = (y * sign)[:n_orig]
    return SimplexResult("optimal", x, float(c @ x), duals, tab.iterations)
