"""Dense simplex kernel for the support-function queries behind every set test.

Every polyhedral predicate in this package reduces to a linear program

    maximize    c @ x
    subject to  A @ x <= b,        x in R^d free,

with few dimensions and potentially many rows.  The solver runs the primal
simplex method on the dual program

    minimize    b @ y
    subject to  A.T @ y = c,       y >= 0,

whose tableau has only ``d`` rows, so a pivot costs O(d * m) regardless of how
many halfspaces pile up during projections.  The optimal primal point is
recovered from the dual multipliers (the phase-two reduced costs of the
artificial columns).  Dantzig pricing is used until the objective stalls,
after which Bland's rule takes over, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import NumericalError

__all__ = ["EPS_LP", "LPStatus", "LPResult", "linprog_max", "chebyshev_center"]

EPS_LP = 1e-9

# pivots with no objective progress before switching to Bland's rule
_STALL_LIMIT = 100


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    """Outcome of one LP solve.

    ``point`` is a maximizer when the status is optimal and None otherwise;
    ``objective`` is meaningful only for optimal status.
    """

    status: LPStatus
    objective: float
    point: np.ndarray | None


class _DualOutcome(Enum):
    OPTIMAL = 0
    INFEASIBLE = 1
    UNBOUNDED = 2


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    piv = T[row, col]
    T[row] /= piv
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    # keep the pivot column numerically clean
    T[:, col] = 0.0
    T[row, col] = 1.0


def _run_simplex(
    T: np.ndarray,
    basis: np.ndarray,
    cost_row: int,
    ncols: int,
    nrows: int,
    tol: float,
) -> _DualOutcome:
    """Minimize the cost in ``cost_row`` over columns ``0..ncols-1`` in place.

    Returns OPTIMAL or UNBOUNDED (for the standard-form problem being run).
    """
    bland = False
    stall = 0
    best = T[cost_row, -1]
    max_iter = 500 + 50 * (ncols + nrows)
    for _ in range(max_iter):
        costs = T[cost_row, :ncols]
        if bland:
            neg = np.flatnonzero(costs < -tol)
            if neg.size == 0:
                return _DualOutcome.OPTIMAL
            col = int(neg[0])
        else:
            col = int(np.argmin(costs))
            if costs[col] >= -tol:
                return _DualOutcome.OPTIMAL
        column = T[:nrows, col]
        rhs = np.maximum(T[:nrows, -1], 0.0)
        ok = column > tol
        if not np.any(ok):
            return _DualOutcome.UNBOUNDED
        ratios = np.full(nrows, np.inf)
        ratios[ok] = rhs[ok] / column[ok]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12)
        # smallest basis label on ties; deterministic and anti-cycling friendly
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, row, col)
        basis[row] = col
        if T[cost_row, -1] > best + 1e-12:
            best = T[cost_row, -1]
            stall = 0
        else:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
    raise NumericalError("simplex iteration cap exceeded")


def _solve_dual(M: np.ndarray, rhs: np.ndarray, g: np.ndarray, tol: float):
    """Solve min g@y s.t. M@y = rhs, y >= 0 by the two-phase tableau method.

    Returns ``(outcome, objective, multipliers)`` where ``multipliers`` are
    the simplex multipliers of the equality rows (the primal maximizer of the
    original problem) for an optimal outcome.
    """
    d, m = M.shape
    sign = np.where(rhs < 0.0, -1.0, 1.0)
    M = M * sign[:, None]
    rhs = rhs * sign

    # columns: m originals | d artificials | rhs; rows: d constraints,
    # phase-2 cost, phase-1 cost
    T = np.zeros((d + 2, m + d + 1))
    T[:d, :m] = M
    T[:d, m : m + d] = np.eye(d)
    T[:d, -1] = rhs
    T[d, :m] = g
    # phase-1 reduced costs after pricing out the artificial basis
    T[d + 1, :m] = -M.sum(axis=0)
    T[d + 1, -1] = -rhs.sum()
    basis = np.arange(m, m + d)

    scale = 1.0 + float(np.abs(rhs).sum())
    outcome = _run_simplex(T, basis, d + 1, m, d, tol)
    if outcome is not _DualOutcome.OPTIMAL or -T[d + 1, -1] > tol * scale:
        return _DualOutcome.INFEASIBLE, 0.0, None

    # drive leftover artificials (basic at zero) out of the basis when possible
    for i in range(d):
        if basis[i] >= m:
            nz = np.flatnonzero(np.abs(T[i, :m]) > 1e-9)
            if nz.size:
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])

    outcome = _run_simplex(T, basis, d, m, d, tol)
    if outcome is _DualOutcome.UNBOUNDED:
        return _DualOutcome.UNBOUNDED, 0.0, None
    objective = -T[d, -1]
    # multipliers: reduced costs of the artificial columns, undone sign flips
    multipliers = -sign * T[d, m : m + d]
    return _DualOutcome.OPTIMAL, float(objective), multipliers


def linprog_max(
    c: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float = EPS_LP
) -> LPResult:
    """Maximize ``c @ x`` subject to ``A @ x <= b`` with ``x`` free."""
    c = np.asarray(c, dtype=float).ravel()
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    m, d = A.shape
    if c.shape[0] != d or b.shape[0] != m:
        raise ValueError("inconsistent LP shapes")

    if m == 0:
        if np.all(np.abs(c) <= tol):
            return LPResult(LPStatus.OPTIMAL, 0.0, np.zeros(d))
        return LPResult(LPStatus.UNBOUNDED, np.inf, None)

    outcome, objective, point = _solve_dual(A.T.copy(), c.copy(), b.copy(), tol)
    if outcome is _DualOutcome.OPTIMAL:
        return LPResult(LPStatus.OPTIMAL, objective, point)
    if outcome is _DualOutcome.UNBOUNDED:
        # dual unbounded below means the primal is infeasible
        return LPResult(LPStatus.INFEASIBLE, -np.inf, None)
    # dual infeasible: the primal is unbounded if feasible, empty otherwise
    probe, _, _ = _solve_dual(A.T.copy(), np.zeros(d), b.copy(), tol)
    if probe is _DualOutcome.UNBOUNDED:
        return LPResult(LPStatus.INFEASIBLE, -np.inf, None)
    return LPResult(LPStatus.UNBOUNDED, np.inf, None)


def chebyshev_center(
    A: np.ndarray, b: np.ndarray, cap: float = 1e6, tol: float = EPS_LP
):
    """Largest inflation radius and a witness point for ``A @ x <= b``.

    Solves max rho s.t. ``A x + rho * ||A_i|| <= b`` and ``rho <= cap``.
    Returns ``(rho, x)``; ``rho < 0`` certifies infeasibility of the original
    system within tolerance, ``rho == cap`` indicates a fat unbounded set.
    Returns ``(-inf, None)`` when even the inflated system is infeasible
    (possible only through trivially false rows such as ``0 <= -1``).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    m, d = A.shape
    if m == 0:
        return cap, np.zeros(d)
    norms = np.linalg.norm(A, axis=1)
    A_ext = np.hstack([A, norms[:, None]])
    cap_row = np.zeros((1, d + 1))
    cap_row[0, -1] = 1.0
    A_ext = np.vstack([A_ext, cap_row])
    b_ext = np.concatenate([b, [cap]])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = linprog_max(c, A_ext, b_ext, tol)
    if res.status is LPStatus.INFEASIBLE:
        return -np.inf, None
    if res.status is not LPStatus.OPTIMAL:
        raise NumericalError("chebyshev LP cannot be unbounded with a cap row")
    return float(res.objective), res.point[:d].copy()
