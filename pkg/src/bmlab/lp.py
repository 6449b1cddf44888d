"""Dense two-phase simplex for the small LPs of the decomposition module.

Problems here have at most a few hundred columns and a dozen rows, so a
tableau method with Bland's anti-cycling fallback is plenty.  Basic
solutions are re-solved from the final basis with a least-squares step,
which keeps equality residuals near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
REFACTOR_ROUNDS = 5


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    basis: list[int]
    phase1_objective: float = 0.0


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> str:
    """Minimize the objective stored in the last row of ``T``."""
    m = T.shape[0] - 1
    stall = 0
    last_obj = T[-1, -1]
    for _ in range(max_iter):
        red = T[-1, :-1]
        cand = np.where((red < -1e-12) & allowed)[0]
        if cand.size == 0:
            return "optimal"
        if stall > 50:
            col = int(cand[0])  # Bland
        else:
            col = int(cand[np.argmin(red[cand])])
        column = T[:m, col]
        pos = column > PIVOT_TOL * max(1.0, float(np.abs(column).max()))
        if not pos.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(T[:m, -1][pos], 0.0) / column[pos]
        best = ratios.min()
        ties = np.where(ratios <= best + 1e-12 * max(1.0, abs(best)))[0]
        if stall > 50:
            row = int(min(ties, key=lambda i: basis[i]))
        else:
            # largest pivot among near-ties keeps the tableau well conditioned
            row = int(ties[np.argmax(column[ties])])
        _pivot(T, row, col)
        basis[row] = col
        obj = T[-1, -1]
        stall = stall + 1 if abs(obj - last_obj) <= 1e-15 * max(1.0, abs(obj)) else 0
        last_obj = obj
    raise RuntimeError("simplex iteration limit reached")


def _refactor(T: np.ndarray, M: np.ndarray, cost: np.ndarray, basis: list[int]) -> None:
    """Rebuild the tableau for ``basis`` from the original rows ``M = [A | b]``."""
    m = len(basis)
    try:
        body = np.linalg.solve(M[:, basis], M)
    except np.linalg.LinAlgError:
        return
    T[:m] = body
    cb = cost[basis]
    T[-1, :-1] = cost - cb @ body[:, :-1]
    T[-1, -1] = -cb @ body[:, -1]


def _solve(T, M, cost, basis, allowed, max_iter) -> str:
    """Run the simplex, re-factor from the original data, and resume while
    the refreshed reduced costs still allow progress."""
    status = "optimal"
    for _ in range(REFACTOR_ROUNDS):
        status = _run(T, basis, allowed, max_iter)
        if status != "optimal":
            return status
        _refactor(T, M, cost, basis)
        if not np.any((T[-1, :-1] < -1e-12) & allowed):
            break
    return status


def simplex(c, A_eq, b_eq, max_iter: int = 20000, feas_tol: float = 1e-9) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_eq @ x = b_eq`` and ``x >= 0``."""
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float).ravel()
    c = np.array(c, dtype=float).ravel()
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    M1 = np.hstack([A, np.eye(m), b[:, None]])
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    _solve(T, M1, cost1, basis, allowed, max_iter)
    phase1 = -T[-1, -1]
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if phase1 > feas_tol * scale:
        return LPResult("infeasible", None, np.inf, basis, phase1)

    # drive artificials out of the basis, dropping redundant rows
    keep = list(range(m))
    for i in range(m):
        if basis[i] >= n:
            row = T[i, :n]
            nz = np.where(np.abs(row) > 1e-9)[0]
            if nz.size:
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])
            else:
                keep.remove(i)
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[i] for i in keep]
    m2 = len(keep)

    # phase 2
    T = np.delete(T, np.s_[n:n + m], axis=1)
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i, j in enumerate(basis):
        if abs(T[-1, j]) > 0:
            T[-1] -= T[-1, j] * T[i]
    allowed = np.ones(n, dtype=bool)
    M2 = np.hstack([A[keep], b[keep, None]])
    status = _solve(T, M2, c, basis, allowed, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf, basis, phase1)

    x = np.zeros(n)
    x[basis] = T[:m2, -1]
    # refine from the original data on the final basis
    B = A[:, basis]
    xb, *_ = np.linalg.lstsq(B, b, rcond=None)
    if np.all(xb >= -1e-10):
        x[:] = 0.0
        x[basis] = np.maximum(xb, 0.0)
    return LPResult("optimal", x, float(c @ x), basis, phase1)


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None, **kw) -> LPResult:
    """Minimize ``c @ x`` with ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    Variables are nonnegative unless flagged in the boolean mask ``free``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    nf = int(free.sum())
    fidx = np.where(free)[0]

    def expand(M):
        M = np.asarray(M, dtype=float).reshape(-1, n)
        return np.hstack([M, -M[:, fidx]])

    blocks, rhs = [], []
    n_ub = 0
    if A_ub is not None and len(A_ub):
        Au = expand(A_ub)
        n_ub = Au.shape[0]
        blocks.append(np.hstack([Au, np.eye(n_ub)]))
        rhs.append(np.asarray(b_ub, dtype=float).ravel())
    if A_eq is not None and len(A_eq):
        Ae = expand(A_eq)
        blocks.append(np.hstack([Ae, np.zeros((Ae.shape[0], n_ub))]))
        rhs.append(np.asarray(b_eq, dtype=float).ravel())
    A = np.vstack(blocks)
    b = np.concatenate(rhs)
    cc = np.concatenate([c, -c[fidx], np.zeros(n_ub)])
    res = simplex(cc, A, b, **kw)
    if res.x is not None:
        z = res.x
        x = z[:n].copy()
        x[fidx] -= z[n:n + nf]
        res = LPResult(res.status, x, float(c @ x), res.basis, res.phase1_objective)
    return res
