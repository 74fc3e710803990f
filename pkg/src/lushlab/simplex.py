"""Dense two-phase simplex for the small linear programs used throughout.

Problems have the form::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

Bland's rule is used for both the entering and the leaving variable, so the
method terminates on degenerate problems; the problems solved here have at
most a few hundred columns, so the slower pivoting rule costs nothing that
matters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-12
OPTIMALITY_TOL = 1e-10
FEASIBILITY_TOL = 1e-9


class LPError(RuntimeError):
    """Raised when a linear program cannot be solved to optimality."""


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    column = tab[:, col].copy()
    column[row] = 0.0
    tab -= np.outer(column, tab[row])
    # clean round-off in the pivot column so it stays a unit vector
    tab[:, col] = 0.0
    tab[row, col] = 1.0


def _run(tab: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> tuple[str, int]:
    """Iterate on ``tab`` (last row is the reduced-cost row) until optimal."""
    m = tab.shape[0] - 1
    for it in range(max_iter):
        costs = tab[-1, :ncols]
        candidates = np.flatnonzero(costs < -OPTIMALITY_TOL)
        if candidates.size == 0:
            return "optimal", it
        col = int(candidates[0])
        column = tab[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return "unbounded", it
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tab, row, col)
        basis[row] = col
    return "iteration_limit", max_iter


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 50_000) -> LPResult:
    """Solve a linear program in inequality/equality form with ``x >= 0``.

    Returns an :class:`LPResult`; ``status`` is one of ``"optimal"``,
    ``"infeasible"``, ``"unbounded"`` or ``"iteration_limit"``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise ValueError("constraint shapes do not match the objective")

    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq
    # columns: original | slacks | artificials
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    basis: list[int] = [-1] * m
    for i in range(m_ub):
        if not flip[i]:
            basis[i] = n + i
    need_art = [i for i in range(m) if basis[i] < 0]
    n_main = n + m_ub
    n_art = len(need_art)
    ncols = n_main + n_art

    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :n_main] = A
    tab[:m, -1] = b
    for k, i in enumerate(need_art):
        tab[i, n_main + k] = 1.0
        basis[i] = n_main + k

    iterations = 0
    if n_art:
        # phase I: minimize the sum of artificials
        tab[-1, n_main:ncols] = 1.0
        for i in need_art:
            tab[-1] -= tab[i]
        status, it = _run(tab, basis, ncols, max_iter)
        iterations += it
        if status == "iteration_limit":
            return LPResult(status, None, None, iterations)
        if -tab[-1, -1] > FEASIBILITY_TOL:
            return LPResult("infeasible", None, None, iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= n_main:
                row = tab[i, :n_main]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size == 0:
                    continue
                col = int(nz[0])
                _pivot(tab, i, col)
                basis[i] = col
            keep.append(i)
        tab = np.vstack([tab[keep], tab[-1:]])
        basis = [basis[i] for i in keep]
        tab = np.delete(tab, np.s_[n_main:ncols], axis=1)
        m = len(keep)

    cost = np.zeros(n_main)
    cost[:n] = c
    tab[-1, :] = 0.0
    tab[-1, :n_main] = cost
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            tab[-1] -= cost[j] * tab[i]
    status, it = _run(tab, basis, n_main, max_iter)
    iterations += it
    if status != "optimal":
        return LPResult(status, None, None, iterations)
    x = np.zeros(n_main)
    for i, j in enumerate(basis):
        x[j] = tab[i, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult("optimal", x, float(c @ x), iterations)


def solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LPResult:
    """Like :func:`linprog` but raise :class:`LPError` unless optimal."""
    res = linprog(c, A_ub, b_ub, A_eq, b_eq)
    if not res.success:
        raise LPError(f"linear program not solved: {res.status}")
    return res
