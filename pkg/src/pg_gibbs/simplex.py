"""Dense two-phase primal simplex with Bland's rule.

Solves ``min c^T x  s.t.  A x = b, x >= 0``. Small and dependency-free apart
from numpy; meant for the feasibility programs of the propriety check, where
n is at most a few thousand and p is small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPIterationLimit


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])
    basis[row] = col


def _run(T: np.ndarray, basis: list[int], ncols: int, tol: float, budget: list[int]) -> str:
    """Iterate on tableau ``T`` (last row = reduced costs, last column = rhs)."""
    m = T.shape[0] - 1
    while True:
        d = T[-1, :ncols]
        entering = np.flatnonzero(d < -tol)
        if entering.size == 0:
            return "optimal"
        col = int(entering[0])
        a = T[:m, col]
        rows = np.flatnonzero(a > tol)
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / a[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        if budget[0] <= 0:
            raise LPIterationLimit("simplex iteration cap reached")
        budget[0] -= 1
        _pivot(T, basis, row, col)


def simplex(c, A_eq, b_eq, *, tol: float = 1e-10, max_iter: int | None = None) -> LPResult:
    A = np.array(A_eq, dtype=float, ndmin=2)
    b = np.array(b_eq, dtype=float).ravel()
    c = np.array(c, dtype=float).ravel()
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    if max_iter is None:
        max_iter = 50 * (m + n) + 100
    budget = [int(max_iter)]
    scale = max(1.0, float(np.abs(A).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    tol_s = tol * scale

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # phase one: artificials n .. n+m-1, minimise their sum
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    status = _run(T, basis, n + m, tol_s, budget)
    iters = int(max_iter) - budget[0]
    if status != "optimal" or -T[-1, -1] > tol_s * max(1, m):
        return LPResult("infeasible", None, None, iters)

    # drive remaining (zero-level) artificials out; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n:
            cand = np.flatnonzero(np.abs(T[r, :n]) > tol_s)
            if cand.size:
                _pivot(T, basis, r, int(cand[0]))
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[keep][:, list(range(n)) + [-1]], np.zeros((1, n + 1))])
    basis = [basis[r] for r in keep]

    # phase two
    T[-1, :n] = c
    for r, j in enumerate(basis):
        T[-1] -= c[j] * T[r]
    status = _run(T, basis, n, tol_s, budget)
    iters = int(max_iter) - budget[0]
    if status == "unbounded":
        return LPResult("unbounded", None, None, iters)
    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    x = np.maximum(x, 0.0)
    return LPResult("optimal", x, float(c @ x), iters)
