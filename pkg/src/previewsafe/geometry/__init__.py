"""Polyhedral and interval kernel: intervals, hyperboxes, H-polytopes, LPs."""

from .interval import (
    Hyperbox,
    Interval,
    box_vertices,
    convex_weights,
    interval_add,
    interval_sub,
    interval_sum,
)
from .lp import EPS_LP, LPResult, LPStatus, chebyshev_center, linprog_max
from .polytope import (
    EPS_SET,
    HPolytope,
    contains_point,
    contains_set,
    is_empty,
    pontryagin_diff,
    project,
    reduce_rows,
    set_equal,
    support,
    volume,
)

__all__ = [
    "Interval",
    "Hyperbox",
    "interval_add",
    "interval_sub",
    "interval_sum",
    "box_vertices",
    "convex_weights",
    "EPS_LP",
    "LPStatus",
    "LPResult",
    "linprog_max",
    "chebyshev_center",
    "EPS_SET",
    "HPolytope",
    "support",
    "pontryagin_diff",
    "project",
    "reduce_rows",
    "contains_set",
    "set_equal",
    "is_empty",
    "contains_point",
    "volume",
]
