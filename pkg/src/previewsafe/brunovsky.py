"""Closed-form invariance machinery for shift-register systems in a state box.

For the single-input shift register (upper-shift A, input entering the last
coordinate, full disturbance matrix) with state box B = prod_k [b_{k,1},
b_{k,2}] and disturbance set D whose smallest enclosing box is prod_k
[c_{k,1}, c_{k,2}], this module provides:

* the vertex nonemptiness test and its equivalent n^2-inequality form,
* the explicit maximal controlled invariant set of the p-augmented system
  as a list of scalar constraints on x_k plus previewed disturbance entries,
* the preview-fed safe controller built from barycentric weights over the
  tail-disturbance box,
* the collapse (p >= n) and state-projection identities, and the largest
  tolerable symmetric disturbance bound for a given preview time.

Index conventions (the single most error-prone detail in here, so it is kept
in one place): all math indices below are 1-based as in the derivation and
converted to 0-based only when slicing arrays.

* pbar = min(p, n).
* bhat_k = [b_{k,1} - sum_{i=k}^{n-pbar} c_{i,1},
            b_{k,2} - sum_{i=k}^{n-pbar} c_{i,2}]  for k = 1..n, with empty
  scalar sums equal to zero.  (The subtracted tail covers the never-previewed
  steps.)
* The tail box B_{d,pbar} = prod_{k=n-pbar+1}^{n} [c_{k,1}, c_{k,2}]; its
  j-th coordinate (j = 1..pbar) is original coordinate n - pbar + j.
* The preview stack v has v_j = d_{pbar-j+1, n-pbar+j}, i.e. the freshest
  previewed step contributes its last coordinate at the end of v, and
  v_{pbar-i+1} = d_{i, n-i+1}.
* The safe-input interval at stack v is
  I(v) = intersection over k = 1..n of (bhat_k - s_k(v)) with
  s_k(v) = sum_{i=1}^{min(n-k+1, pbar)} v_{pbar-i+1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInvariantError, InvalidParametersError
from .geometry import (
    HPolytope,
    Hyperbox,
    Interval,
    box_vertices,
    contains_point,
    convex_weights,
    interval_sub,
    interval_sum,
    project,
    set_equal,
)
from .geometry.polytope import _as_polytope
from .invariance import lift, method1
from .systems import BrunovskyProblem, collaborative

__all__ = [
    "InvariantConstraint",
    "BrunovskyInvariant",
    "nonempty_vertex",
    "nonempty_ineq",
    "closed_form",
    "membership",
    "to_hpolytope",
    "safe_input_interval",
    "preview_stack",
    "vertex_interval",
    "controller_g",
    "collapse",
    "projection_identity",
    "largest_c",
    "evariant_membership",
]


def pbar_of(problem: BrunovskyProblem) -> int:
    return min(problem.p, problem.n)


def _c_lo_hi(problem: BrunovskyProblem):
    return problem.dist_box.lo, problem.dist_box.hi


def bhat(problem: BrunovskyProblem) -> list:
    """The tail-adjusted state bounds, one interval per k = 1..n."""
    n = problem.n
    pb = pbar_of(problem)
    blo, bhi = problem.box.lo, problem.box.hi
    clo, chi = _c_lo_hi(problem)
    out = []
    for k in range(1, n + 1):
        # scalar empty-sum convention: sum_{i=k}^{n-pbar} is 0 when k > n-pbar
        lo = blo[k - 1] - float(np.sum(clo[k - 1 : n - pb]))
        hi = bhi[k - 1] - float(np.sum(chi[k - 1 : n - pb]))
        if lo > hi:
            return out + [Interval.EMPTY] + [None] * (n - k)
        out.append(Interval(lo, hi))
    return out


def tail_box(problem: BrunovskyProblem) -> Hyperbox:
    """B_{d,pbar}: the box of never-previewed disturbance coordinates."""
    pb = pbar_of(problem)
    n = problem.n
    return Hyperbox(tuple(problem.dist_box.intervals[n - pb : n]))


def preview_stack(problem: BrunovskyProblem, d_list: Sequence) -> np.ndarray:
    """Stack v with v_j = d_{pbar-j+1, n-pbar+j} from the previewed steps."""
    n, p = problem.n, problem.p
    pb = pbar_of(problem)
    if len(d_list) != p:
        raise ValueError(f"expected {p} previewed disturbances, got {len(d_list)}")
    ds = [np.asarray(d, dtype=float).ravel() for d in d_list]
    for d in ds:
        if d.shape[0] != n:
            raise ValueError("each previewed disturbance must be n-dimensional")
    v = np.zeros(pb)
    for j in range(1, pb + 1):
        v[j - 1] = ds[pb - j][n - pb + j - 1]  # d_{pbar-j+1} is ds[pb-j]
    return v


def _stack_shift(problem: BrunovskyProblem, v: np.ndarray, k: int) -> float:
    """s_k(v) = sum_{i=1}^{min(n-k+1, pbar)} v_{pbar-i+1}."""
    pb = pbar_of(problem)
    count = min(problem.n - k + 1, pb)
    return float(np.sum(v[pb - count :])) if count > 0 else 0.0


def vertex_interval(problem: BrunovskyProblem, v: np.ndarray) -> Interval:
    """I(v): inputs safe against every future beyond the stack v."""
    bh = bhat(problem)
    out = None
    for k in range(1, problem.n + 1):
        iv = bh[k - 1]
        if iv is None or iv.is_empty:
            return Interval.EMPTY
        shifted = iv.shift(-_stack_shift(problem, v, k))
        out = shifted if out is None else out.intersect(shifted)
        if out.is_empty:
            return Interval.EMPTY
    return out


def nonempty_vertex(problem: BrunovskyProblem, cap: int = 20) -> bool:
    """Vertex form of the nonemptiness test: I(v) nonempty at every vertex of
    the tail box.  Raises DimensionTooLarge for pbar above the cap."""
    for v in box_vertices(tail_box(problem), cap=cap):
        if vertex_interval(problem, v).is_empty:
            return False
    return True


def nonempty_ineq(problem: BrunovskyProblem) -> bool:
    """Equivalent n^2-inequality nonemptiness test (three index cases).

    Evaluated exactly as printed, with every empty scalar sum equal to zero;
    uses p itself (not pbar), which makes the test p-independent once p >= n.
    """
    n, p = problem.n, problem.p
    blo, bhi = problem.box.lo, problem.box.hi
    clo, chi = _c_lo_hi(problem)

    def ssum(values, lo_1b: int, hi_1b: int) -> float:
        if lo_1b > hi_1b:
            return 0.0
        return float(np.sum(values[lo_1b - 1 : hi_1b]))

    for j in range(1, n + 1):
        for k in range(1, n + 1):
            lhs = blo[j - 1] - bhi[k - 1]
            if j == k:
                rhs = ssum(clo, k, n - p) - ssum(chi, k, n - p)
            elif j < k:
                rhs = (
                    ssum(clo, j, n - p)
                    - ssum(chi, k, n - p)
                    + ssum(clo, max(j, n - p + 1), max(k - 1, n - p))
                )
            else:
                rhs = (
                    ssum(clo, j, n - p)
                    - ssum(chi, k, n - p)
                    - ssum(chi, max(k, n - p + 1), max(j - 1, n - p))
                )
            if lhs > rhs + 1e-12:
                return False
    return True


@dataclass(frozen=True)
class InvariantConstraint:
    """One scalar constraint of the closed form, indexed by (k, j), 1-based:

        x_k + sum_{(i, c) in dcoords} d_{i, c}  in  bound,

    where dcoords = [(i, k - i) for i = 1..min(k - j, p)] and bound is
    [b_{j,1}, b_{j,2}] minus (endpoint-wise) the never-previewed tail sums.
    """

    k: int
    j: int
    dcoords: tuple
    bound: Interval

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "j": self.j,
            "dcoords": [list(pair) for pair in self.dcoords],
            "bound": {"lo": self.bound.lo, "hi": self.bound.hi},
        }


@dataclass(frozen=True)
class BrunovskyInvariant:
    """The explicit maximal controlled invariant set of the augmented system:
    membership in the state box, each previewed step in D, plus the
    constraint records."""

    problem: BrunovskyProblem
    constraints: tuple

    def to_json(self) -> dict:
        return {
            "n": self.problem.n,
            "p": self.problem.p,
            "box": self.problem.box.to_json(),
            "dist_box": self.problem.dist_box.to_json(),
            "constraints": [c.to_json() for c in self.constraints],
        }


def closed_form(problem: BrunovskyProblem) -> BrunovskyInvariant:
    """Materialize the constraint records of the maximal invariant set.

    Requires the nonemptiness condition; raises
    :class:`EmptyInvariantError` when it fails.
    """
    if not nonempty_ineq(problem):
        raise EmptyInvariantError("no nonempty controlled invariant set exists")
    n, p = problem.n, problem.p
    blo, bhi = problem.box.lo, problem.box.hi
    clo, chi = _c_lo_hi(problem)
    records = []
    for k in range(2, n + 1):
        for j in range(1, k):
            dcoords = tuple((i, k - i) for i in range(1, min(k - j, p) + 1))
            # interval empty-sum convention: no tail terms once p+1 > k-j
            tail = interval_sum(
                Interval(clo[k - i - 1], chi[k - i - 1]) for i in range(p + 1, k - j + 1)
            )
            bound = interval_sub(Interval(blo[j - 1], bhi[j - 1]), tail)
            if bound.is_empty:
                raise EmptyInvariantError(
                    "constraint bound collapsed despite the nonemptiness test"
                )
            records.append(InvariantConstraint(k=k, j=j, dcoords=dcoords, bound=bound))
    return BrunovskyInvariant(problem=problem, constraints=tuple(records))


def membership(
    inv: BrunovskyInvariant, x, d_list: Sequence, tol: float = 1e-9
) -> bool:
    """Point test: x in the box, every d_i in D (the true set, not its box),
    and every constraint record satisfied."""
    problem = inv.problem
    n, p = problem.n, problem.p
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != n:
        raise ValueError("state dimension mismatch")
    if len(d_list) != p:
        raise ValueError(f"expected {p} previewed disturbances")
    ds = [np.asarray(d, dtype=float).ravel() for d in d_list]
    if not problem.box.contains(x, tol):
        return False
    for d in ds:
        if not contains_point(problem.dist, d, tol):
            return False
    for rec in inv.constraints:
        total = x[rec.k - 1] + sum(ds[i - 1][c - 1] for i, c in rec.dcoords)
        if not rec.bound.contains(total, tol):
            return False
    return True


def to_hpolytope(inv: BrunovskyInvariant) -> HPolytope:
    """H-form of the invariant over (x, d_1, ..., d_p) in R^{n + n p}."""
    problem = inv.problem
    n, p = problem.n, problem.p
    dim = n * (p + 1)
    rows = []
    rhs = []
    box_rows = HPolytope.from_box(problem.box)
    rows.append(np.hstack([box_rows.H, np.zeros((box_rows.nrows, dim - n))]))
    rhs.append(box_rows.h)
    dpoly = _as_polytope(problem.dist)
    for i in range(p):
        block = np.zeros((dpoly.nrows, dim))
        block[:, n + i * n : n + (i + 1) * n] = dpoly.H
        rows.append(block)
        rhs.append(dpoly.h)
    for rec in inv.constraints:
        row = np.zeros(dim)
        row[rec.k - 1] = 1.0
        for i, c in rec.dcoords:
            row[n + (i - 1) * n + (c - 1)] = 1.0
        rows.append(np.vstack([row, -row]))
        rhs.append(np.array([rec.bound.hi, -rec.bound.lo]))
    return HPolytope(np.vstack(rows), np.concatenate(rhs))


def safe_input_interval(problem: BrunovskyProblem, d_list: Sequence) -> Interval:
    """Inputs safe against all futures, given the previewed steps."""
    return vertex_interval(problem, preview_stack(problem, d_list))


def controller_g(problem: BrunovskyProblem, d_list: Sequence) -> float:
    """Preview-only safe controller: barycentric combination over the tail
    box of the midpoints of the per-vertex safe-input intervals.

    Raises :class:`EmptyInvariantError` if any vertex interval is empty
    (equivalently, if the nonemptiness condition fails).
    """
    v = preview_stack(problem, d_list)
    box = tail_box(problem)
    mids = {}
    for e in box_vertices(box):
        iv = vertex_interval(problem, e)
        if iv.is_empty:
            raise EmptyInvariantError("a tail-vertex safe-input interval is empty")
        mids[tuple(e)] = iv.mid
    u = 0.0
    for vertex, weight in convex_weights(box, v):
        u += weight * mids[tuple(vertex)]
    return float(u)


@dataclass(frozen=True)
class CollapseResult:
    c_n: BrunovskyInvariant
    verified: bool


def collapse(problem: BrunovskyProblem) -> CollapseResult:
    """For p > n the invariant factors as C_n x D^(p-n); build and verify."""
    if problem.p <= problem.n:
        raise InvalidParametersError("collapse applies to p > n")
    inv_n = closed_form(problem.with_preview(problem.n))
    inv_p = closed_form(problem)
    lifted = lift(to_hpolytope(inv_n), problem.dist, problem.p - problem.n)
    verified = set_equal(to_hpolytope(inv_p), lifted)
    return CollapseResult(c_n=inv_n, verified=verified)


def projection_identity(problem: BrunovskyProblem, max_iter: int = 200) -> dict:
    """State projection of C_n equals the collaborative maximal set (p >= n)."""
    if problem.p < problem.n:
        raise InvalidParametersError("the projection identity applies to p >= n")
    inv_n = closed_form(problem.with_preview(problem.n))
    rhs = project(to_hpolytope(inv_n), list(range(problem.n)))
    co = collaborative(problem.system()).sys
    lhs = method1(co, max_iter).result
    return {"lhs": lhs, "rhs": rhs, "equal": set_equal(lhs, rhs)}


def largest_c(n: int, p: int, box: Hyperbox, tol: float = 1e-9) -> float:
    """Supremum of c such that D = [-c, c]^n still admits a nonempty
    invariant set, by bisection on the n^2-inequality test.

    Returns ``inf`` when every bound is feasible (possible for n = 1 with
    preview, where the input cancels the disturbance exactly).
    """
    if box.dim != n or box.is_empty:
        raise InvalidParametersError("state box must be a nonempty n-dim box")

    def feasible(c: float) -> bool:
        prob = BrunovskyProblem.create(n, box, Hyperbox.cube(n, c), p)
        return nonempty_ineq(prob)

    if not feasible(0.0):
        return 0.0
    hi = float(np.max(np.abs(np.concatenate([box.lo, box.hi])))) + 1.0
    # the nominal bracket can be feasible (n = 1, or wide boxes with p >= n);
    # expand geometrically before declaring the supremum unbounded
    expansions = 0
    while feasible(hi):
        hi *= 2.0
        expansions += 1
        if expansions > 60:
            return float("inf")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def evariant_membership(
    problem_v: BrunovskyProblem, x, d_list: Sequence, tol: float = 1e-9
) -> bool:
    """Membership for the matrix-disturbance variant: each previewed step is
    checked against the original set and mapped through Ebar before the
    shift-register test."""
    if problem_v.ebar is None:
        inv = closed_form(problem_v)
        return membership(inv, x, d_list, tol)
    ebar = problem_v.ebar
    ds = [np.asarray(d, dtype=float).ravel() for d in d_list]
    for d in ds:
        if d.shape[0] != ebar.shape[1]:
            raise ValueError("previewed disturbance dimension mismatch")
        if not contains_point(problem_v.dist_v, d, tol):
            return False
    mapped = [ebar @ d for d in ds]
    inv = closed_form(problem_v)
    return membership(inv, x, mapped, tol)
