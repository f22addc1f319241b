"""Dense two-phase primal simplex for small LPs.

Solves  minimize c.x  subject to  A x <= b,  x >= 0  on a dense tableau with
Bland's anti-cycling rule (lowest eligible index enters, lowest ratio row
with lowest basis index leaves). Meant for the cut-cone distortion programs:
a few hundred rows and a few thousand columns at most; robustness over speed.

The result carries the optimal basis's dual vector and reduced costs so
callers can certify optimality through complementary slackness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SimplexResult", "solve_lp"]

PIVOT_TOL = 1e-9


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | unbounded | stalled
    x: np.ndarray | None = None
    objective: float | None = None
    dual: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    basis: np.ndarray | None = None

    def certificate_residuals(self, c, A, b):
        """Max primal/dual feasibility and complementary slackness residuals.

        Conventions: dual y satisfies reduced_cost_j = c_j - y.A_j >= 0 and
        y_i <= 0 for binding-able <= rows; CS pairs are y_i (b - A x)_i and
        x_j rc_j; strong duality compares c.x with y.b.
        """
        if self.x is None or self.dual is None:
            raise ValueError("no optimal solution to certify")
        c = np.asarray(c, dtype=np.float64)
        A = np.asarray(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        slack = b - A @ self.x
        rc = c - A.T @ self.dual
        return {
            "primal_feasibility": float(max(np.max(-slack, initial=0.0),
                                            np.max(-self.x, initial=0.0))),
            "dual_feasibility": float(max(np.max(-rc, initial=0.0),
                                          np.max(self.dual, initial=0.0))),
            "comp_slack_rows": float(np.max(np.abs(self.dual * slack), initial=0.0)),
            "comp_slack_cols": float(np.max(np.abs(self.x * rc), initial=0.0)),
            "duality_gap": float(abs(c @ self.x - b @ self.dual)),
        }


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col
    # degenerate rows must stay exactly zero or Bland's tie set (and with it
    # the anti-cycling guarantee) dissolves into float dust
    rhs = tab[:-1, -1]
    rhs[np.abs(rhs) < 1e-11] = 0.0


def _bland_iterate(tab: np.ndarray, basis: np.ndarray, ncols: int,
                   max_iter: int) -> tuple[str, int]:
    """Dantzig pivoting with Bland's rule as the anti-cycling fallback.

    Most-negative reduced cost enters while the objective makes progress;
    after 2m+16 degenerate pivots in a row the iteration switches to Bland's
    rule (lowest eligible index) until progress resumes, which rules out
    cycling while keeping the usual pivot counts on degenerate programs.
    The leaving row is always the lowest-basis-index exact minimum-ratio row
    (degenerate rows are clamped to exact zeros, keeping the tie set real).
    """
    it = 0
    m = tab.shape[0] - 1
    bland_mode = False
    stall = 0
    stall_limit = 2 * m + 16
    last_obj = tab[-1, -1]
    while it < max_iter:
        obj = tab[-1, :ncols]
        if bland_mode:
            negative = np.flatnonzero(obj < -PIVOT_TOL)
            if len(negative) == 0:
                return "optimal", it
            entering = int(negative[0])
        else:
            entering = int(np.argmin(obj))
            if obj[entering] >= -PIVOT_TOL:
                return "optimal", it
        col = tab[:m, entering]
        rhs = tab[:m, -1]
        eligible = np.flatnonzero(col > PIVOT_TOL)
        if len(eligible) == 0:
            return "unbounded", it
        ratios = rhs[eligible] / col[eligible]
        rmin = float(np.min(ratios))
        ties = eligible[ratios <= rmin]
        best_row = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, best_row, entering)
        it += 1
        if tab[-1, -1] > last_obj + PIVOT_TOL:
            last_obj = tab[-1, -1]
            stall = 0
            bland_mode = False
        else:
            stall += 1
            if stall >= stall_limit:
                bland_mode = True
    return "stalled", it


def solve_lp(c, A, b, max_iter: int = 500000, perturb: bool = True) -> SimplexResult:
    """minimize c.x subject to A x <= b, x >= 0.

    Heavily degenerate programs (the cut-cone LPs tie almost every ratio)
    are solved through a deterministic right-hand-side perturbation
    b_i -> b_i + delta (i+1)/m sign(b_i), which makes ratio tests strict;
    the optimal basis is then repaired exactly to the original b (reduced
    costs are b-independent, so optimality transfers). Any repair failure
    falls back to the unperturbed solve.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP shapes")
    if perturb:
        scale = max(1.0, float(np.max(np.abs(b))))
        sign = np.where(b < 0, -1.0, 1.0)
        delta = 1e-6 * scale * (np.arange(m) + 1) / m * sign
        rough = _solve_core(c, A, b + delta, max_iter)
        if rough.status == "optimal":
            repaired = _repair_basis(c, A, b, rough)
            if repaired is not None:
                return repaired
        # rare path: perturbation failed to help or changed the status
        return _solve_core(c, A, b, max_iter)
    return _solve_core(c, A, b, max_iter)


def _repair_basis(c, A, b, rough: SimplexResult) -> SimplexResult | None:
    """Exact solution for the original rhs from the perturbed optimal basis."""
    m, n = A.shape
    basis = rough.basis
    if basis is None or np.any(basis >= n + m):
        return None
    full = np.hstack([A, np.eye(m)])
    B = full[:, basis]
    try:
        x_basic = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return None
    tol = 1e-7 * max(1.0, float(np.max(np.abs(b))))
    if np.min(x_basic) < -tol:
        return None
    x_full = np.zeros(n + m)
    x_full[basis] = np.maximum(x_basic, 0.0)
    cost = np.concatenate([c, np.zeros(m)])
    try:
        y = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        return None
    rc = cost - full.T @ y
    x = x_full[:n]
    return SimplexResult(
        status="optimal",
        x=x,
        objective=float(c @ x),
        dual=y,
        reduced_costs=rc[:n],
        iterations=rough.iterations,
        basis=basis,
    )


def _solve_core(c, A, b, max_iter: int) -> SimplexResult:
    m, n = A.shape

    # rows with negative rhs get negated and an artificial variable
    neg = b < 0
    n_art = int(np.sum(neg))
    ncols = n + m + n_art
    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :n] = np.where(neg[:, None], -A, A)
    tab[:m, n:n + m] = np.diag(np.where(neg, -1.0, 1.0))
    art_cols = []
    j = n + m
    for i in np.flatnonzero(neg):
        tab[i, j] = 1.0
        art_cols.append(j)
        j += 1
    tab[:m, -1] = np.abs(b)
    basis = np.empty(m, dtype=np.int64)
    art_iter = iter(art_cols)
    for i in range(m):
        basis[i] = next(art_iter) if neg[i] else n + i

    total_iters = 0
    if n_art:
        # phase 1: minimize the artificial sum
        for col in art_cols:
            tab[-1, col] = 1.0
        for i in range(m):
            if basis[i] in art_cols:
                tab[-1] -= tab[i]
        status, iters = _bland_iterate(tab, basis, ncols, max_iter)
        total_iters += iters
        if status != "optimal":
            return SimplexResult(status="stalled", iterations=total_iters)
        if -tab[-1, -1] > 1e-7:
            return SimplexResult(status="infeasible", iterations=total_iters)
        # drive leftover artificials out of the basis where possible
        for i in range(m):
            if basis[i] in art_cols:
                for jj in range(n + m):
                    if abs(tab[i, jj]) > PIVOT_TOL:
                        _pivot(tab, basis, i, jj)
                        break
        tab[-1, :] = 0.0
        for col in art_cols:
            tab[:m, col] = 0.0  # retire the artificial columns

    # phase 2 objective row
    tab[-1, :n] = c
    for i in range(m):
        if basis[i] < n:
            tab[-1] -= c[basis[i]] * tab[i]
    status, iters = _bland_iterate(tab, basis, n + m, max_iter)
    total_iters += iters
    if status != "optimal":
        return SimplexResult(status=status, iterations=total_iters)

    x = np.zeros(ncols)
    x[basis] = tab[:m, -1]
    x = x[:n]
    # dual from the basis: solve B^T y = c_B over original + slack columns
    full = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])
    in_range = basis < n + m
    B = full[:, basis[in_range]]
    if B.shape[1] < m:
        # leftover zero-level artificials span redundant rows; pad duals by
        # least squares on the square system
        y = np.linalg.lstsq(full[:, basis[in_range]].T, cost[basis[in_range]],
                            rcond=None)[0]
    else:
        y = np.linalg.solve(B.T, cost[basis])
    rc = cost - full.T @ y
    return SimplexResult(
        status="optimal",
        x=x,
        objective=float(c @ x),
        dual=y,
        reduced_costs=rc[:n],
        iterations=total_iters,
        basis=basis.copy(),
    )
