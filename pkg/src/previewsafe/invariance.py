"""Fixed-point machinery for controlled invariant sets.

The controlled predecessor of a target set X is

    pre(X) = { x : exists u with (x, u) in S_xu and A x + B u + E d in X
               for every d in D },

computed as: erode X by the disturbance image E D, pull the eroded set back
through the affine map (x, u) -> A x + B u, intersect with S_xu, project out
u, reduce.  The robust quantifier over d costs one support evaluation per row
of X; for preview-augmented systems E is nonzero only on the freshest
disturbance block, so those supports see only that block.

Method 1 iterates pre downward from the state projection of the safe set and
returns the maximal controlled invariant set when it converges (which is not
guaranteed in finitely many steps).  Method 2 grows a seed that is already
controlled invariant; every iterate stays controlled invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NumericalError, SeedNotInvariantError
from .geometry import (
    HPolytope,
    Hyperbox,
    contains_set,
    pontryagin_diff,
    project,
    set_equal,
    volume,
)
from .geometry.polytope import _as_polytope
from .systems import LinearSystem, augment, collaborative

__all__ = [
    "IterationReport",
    "pre",
    "safe_state_projection",
    "method1",
    "method2",
    "is_invariant",
    "admissible_inputs",
    "lift",
    "sandwich",
    "preview_gain",
]


@dataclass(frozen=True)
class IterationReport:
    """Result of a fixed-point run: final set, step count, convergence flag,
    and the per-iterate row counts for performance diagnostics."""

    result: HPolytope
    iterations: int
    converged: bool
    per_step_rows: tuple

    def to_json(self) -> dict:
        return {
            "result": self.result.to_json(),
            "iterations": self.iterations,
            "converged": self.converged,
            "per_step_rows": list(self.per_step_rows),
        }


def pre(sys: LinearSystem, X: HPolytope) -> HPolytope:
    """Controlled predecessor of ``X`` under ``sys`` (safe set included)."""
    n, m = sys.n, sys.m
    if X.dim != n:
        raise ValueError("target set must live in the state space")
    if X.is_empty:
        return HPolytope.empty(n)
    eroded = pontryagin_diff(X, sys.dist_set, sys.E)
    if eroded.is_empty:
        return HPolytope.empty(n)
    pulled_H = np.hstack([eroded.H @ sys.A, eroded.H @ sys.B])
    H = np.vstack([pulled_H, sys.safe.H])
    h = np.concatenate([eroded.h, sys.safe.h])
    return project(HPolytope(H, h), list(range(n)))


def safe_state_projection(sys: LinearSystem) -> HPolytope:
    """Projection of the safe set onto the state coordinates."""
    return project(sys.safe, list(range(sys.n)))


def method1(sys: LinearSystem, max_iter: int = 200) -> IterationReport:
    """Downward iteration from the safe-state projection to the maximal set.

    Stops on a fixed point (mutual containment within ``EPS_SET``) or after
    ``max_iter`` steps; non-convergence is reported, not raised.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    X = safe_state_projection(sys)
    rows = [X.nrows]
    converged = False
    iterations = 0
    for _ in range(max_iter):
        Xn = pre(sys, X)
        iterations += 1
        rows.append(Xn.nrows)
        if set_equal(Xn, X):
            X = Xn
            converged = True
            break
        X = Xn
    return IterationReport(
        result=X, iterations=iterations, converged=converged, per_step_rows=tuple(rows)
    )


def is_invariant(sys: LinearSystem, C: HPolytope) -> bool:
    """True iff ``C`` is controlled invariant for ``sys`` within its safe set."""
    if C.dim != sys.n:
        raise ValueError("candidate set must live in the state space")
    if C.is_empty:
        return True
    if not contains_set(safe_state_projection(sys), C):
        return False
    return contains_set(pre(sys, C), C)


def method2(sys: LinearSystem, seed: HPolytope, K: int) -> IterationReport:
    """Grow a controlled invariant seed by iterating pre at most ``K`` times.

    The seed must itself be controlled invariant (checked; raises
    :class:`SeedNotInvariantError` otherwise), which makes every iterate
    controlled invariant and the sequence nondecreasing.
    """
    if K < 0:
        raise ValueError("iteration budget must be nonnegative")
    if not is_invariant(sys, seed):
        raise SeedNotInvariantError("seed set failed the invariance check")
    X = seed
    rows = [X.nrows]
    converged = False
    iterations = 0
    for _ in range(K):
        Xn = pre(sys, X)
        iterations += 1
        rows.append(Xn.nrows)
        if set_equal(Xn, X):
            X = Xn
            converged = True
            break
        X = Xn
    return IterationReport(
        result=X, iterations=iterations, converged=converged, per_step_rows=tuple(rows)
    )


def admissible_inputs(sys: LinearSystem, C: HPolytope, x) -> HPolytope:
    """Inputs keeping ``(x, u)`` safe and the successor inside ``C`` robustly.

    Returns an H-polytope in u-space; possibly empty.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != sys.n:
        raise ValueError("state dimension mismatch")
    if sys.m == 0:
        raise ValueError("admissible input set requires an input channel")
    if C.is_empty:
        return HPolytope.empty(sys.m)
    eroded = pontryagin_diff(C, sys.dist_set, sys.E)
    if eroded.is_empty:
        return HPolytope.empty(sys.m)
    H_dyn = eroded.H @ sys.B
    h_dyn = eroded.h - eroded.H @ (sys.A @ x)
    H_safe = sys.safe.H[:, sys.n :]
    h_safe = sys.safe.h - sys.safe.H[:, : sys.n] @ x
    return HPolytope(np.vstack([H_dyn, H_safe]), np.concatenate([h_dyn, h_safe]))


def lift(C: HPolytope, D: Union[Hyperbox, HPolytope], extra: int) -> HPolytope:
    """Cartesian product ``C x D^extra`` in H-form."""
    if extra < 0:
        raise ValueError("extra must be nonnegative")
    out = C
    dpoly = _as_polytope(D)
    for _ in range(extra):
        out = out.cartesian(dpoly)
    return out


def sandwich(
    sys: LinearSystem, p_low: int, p: int, max_iter: int = 200
) -> dict:
    """Inner and outer bounds on the maximal invariant set at preview ``p``.

    inner = (maximal set at preview ``p_low``) x D^(p - p_low); outer =
    (maximal set of the disturbance-collaborative system) x D^p.  The outer
    bound is checked to contain the inner bound.
    """
    if not 0 <= p_low < p:
        raise ValueError("need 0 <= p_low < p")
    low_report = method1(augment(sys, p_low).aug, max_iter)
    inner = lift(low_report.result, sys.dist_set, p - p_low)
    co_report = method1(collaborative(sys).sys, max_iter)
    outer = lift(co_report.result, sys.dist_set, p)
    if not contains_set(outer, inner):
        raise NumericalError("outer preview bound lost containment of the inner bound")
    return {
        "inner": inner,
        "outer": outer,
        "inner_report": low_report,
        "outer_report": co_report,
    }


def preview_gain(
    sys: LinearSystem,
    p_low: int,
    p: int,
    seed: int = 0,
    samples: int = 200_000,
    max_iter: int = 200,
) -> dict:
    """Volumes of the preview bounds; the gap caps what more preview can buy."""
    bounds = sandwich(sys, p_low, p, max_iter)
    inner_vol = volume(bounds["inner"], seed=seed, samples=samples)
    outer_vol = volume(bounds["outer"], seed=seed, samples=samples)
    return {
        "inner_vol": inner_vol,
        "outer_vol": outer_vol,
        "gap": outer_vol - inner_vol,
    }
