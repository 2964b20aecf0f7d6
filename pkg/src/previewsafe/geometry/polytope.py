"""Halfspace-represented polytopes and the set operations built on them.

An :class:`HPolytope` is ``{z : H @ z <= h}`` with rows normalized to unit
Euclidean norm at construction, which makes the set-comparison tolerance
``EPS_SET`` meaningful across all queries.  Equalities are encoded as
inequality pairs, so degenerate (measure-zero) sets are first class.  An
empty set detected at construction collapses to the canonical marker row
``0 @ z <= -1``.

Projection is exact Fourier-Motzkin elimination with redundancy removal
interleaved after every eliminated variable, which is what keeps the
intermediate row counts under control.  All redundancy and containment
certificates are linear programs solved by :mod:`previewsafe.geometry.lp`.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptySetError, RowBlowupError, UnboundedError
from .interval import Hyperbox
from .lp import LPResult, LPStatus, chebyshev_center, linprog_max

__all__ = [
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

EPS_SET = 1e-6

# coefficients below this (on unit-norm rows) are treated as exact zeros
_ZERO_TOL = 1e-9
# LP slack above which a relaxed facet is considered irredundant
_RED_TOL = 1e-9

_ROW_CAP = 5000


def _clean_rows(H: np.ndarray, h: np.ndarray):
    """Normalize rows to unit norm; resolve zero rows.

    A zero row with a negative offset certifies emptiness.  Returns
    ``(H, h, empty_flag)``.
    """
    norms = np.linalg.norm(H, axis=1)
    zero = norms <= 1e-12
    if np.any(h[zero] < -_ZERO_TOL):
        return None, None, True
    keep = ~zero
    H = H[keep]
    h = h[keep]
    norms = norms[keep]
    if H.shape[0]:
        H = H / norms[:, None]
        h = h / norms
    return H, h, False


class HPolytope:
    """Convex polyhedron ``{z in R^d : H @ z <= h}``.

    Immutable after construction; rows are unit-normalized and trivial rows
    are dropped.  ``HPolytope(np.zeros((0, d)), np.zeros(0))`` is the whole
    space.
    """

    __slots__ = ("_H", "_h", "_dim", "_empty", "_inner_point")

    def __init__(self, H, h):
        H = np.array(H, dtype=float, ndmin=2)
        h = np.asarray(h, dtype=float).ravel()
        if H.shape[0] != h.shape[0]:
            raise ValueError("row count of H must match length of h")
        if H.shape[0] == 0 and H.shape[1] == 0:
            raise ValueError("ambient dimension must be positive")
        self._dim = H.shape[1]
        cleaned = _clean_rows(H, h)
        if cleaned[2]:
            self._H = np.zeros((1, self._dim))
            self._h = np.array([-1.0])
            self._empty = True
            self._inner_point = None
        else:
            self._H = cleaned[0]
            self._h = cleaned[1]
            self._empty = None
            self._inner_point = None
        self._H.setflags(write=False)
        self._h.setflags(write=False)

    @classmethod
    def empty(cls, dim: int) -> "HPolytope":
        return cls(np.zeros((1, dim)), np.array([-1.0]))

    @classmethod
    def universe(cls, dim: int) -> "HPolytope":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def from_box(cls, box: Hyperbox) -> "HPolytope":
        if box.is_empty:
            return cls.empty(box.dim)
        d = box.dim
        H = np.vstack([np.eye(d), -np.eye(d)])
        h = np.concatenate([box.hi, -box.lo])
        return cls(H, h)

    @classmethod
    def from_bounds(cls, lo, hi) -> "HPolytope":
        return cls.from_box(Hyperbox.from_bounds(lo, hi))

    @property
    def H(self) -> np.ndarray:
        return self._H

    @property
    def h(self) -> np.ndarray:
        return self._h

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def nrows(self) -> int:
        return self._H.shape[0]

    @property
    def is_empty(self) -> bool:
        if self._empty is None:
            rho, point = chebyshev_center(self._H, self._h)
            self._empty = rho < -1e-9
            self._inner_point = None if self._empty else point
        return self._empty

    def feasible_point(self) -> np.ndarray:
        """Some point of the set (the inflation-LP witness)."""
        if self.is_empty:
            raise EmptySetError("no feasible point in an empty polytope")
        return self._inner_point.copy()

    def contains_point(self, z, tol: float = 1e-7) -> bool:
        z = np.asarray(z, dtype=float).ravel()
        if z.shape[0] != self._dim:
            raise ValueError("point dimension mismatch")
        if self.nrows == 0:
            return True
        return bool(np.all(self._H @ z <= self._h + tol))

    def support(self, direction) -> float:
        """sup over the set of ``direction @ z``.

        Raises :class:`EmptySetError` on an empty set and
        :class:`UnboundedError` when the set is unbounded in ``direction``.
        """
        direction = np.asarray(direction, dtype=float).ravel()
        if direction.shape[0] != self._dim:
            raise ValueError("direction dimension mismatch")
        res = linprog_max(direction, self._H, self._h)
        if res.status is LPStatus.INFEASIBLE:
            raise EmptySetError("support of an empty set")
        if res.status is LPStatus.UNBOUNDED:
            raise UnboundedError("set is unbounded in the requested direction")
        return float(res.objective)

    def maximize(self, direction) -> LPResult:
        """Raw LP access: maximize ``direction @ z`` over the set."""
        direction = np.asarray(direction, dtype=float).ravel()
        return linprog_max(direction, self._H, self._h)

    def intersect(self, other: "HPolytope") -> "HPolytope":
        if other.dim != self._dim:
            raise ValueError("dimension mismatch in intersection")
        return HPolytope(
            np.vstack([self._H, other.H]), np.concatenate([self._h, other.h])
        )

    def cartesian(self, other) -> "HPolytope":
        """Cartesian product; ``other`` may be an HPolytope or a Hyperbox."""
        if isinstance(other, Hyperbox):
            other = HPolytope.from_box(other)
        left = np.hstack([self._H, np.zeros((self.nrows, other.dim))])
        right = np.hstack([np.zeros((other.nrows, self._dim)), other.H])
        return HPolytope(np.vstack([left, right]), np.concatenate([self._h, other.h]))

    def bounding_box(self) -> Hyperbox:
        """Smallest enclosing hyperbox, via 2*dim support calls."""
        lo = np.zeros(self._dim)
        hi = np.zeros(self._dim)
        for k in range(self._dim):
            e = np.zeros(self._dim)
            e[k] = 1.0
            hi[k] = self.support(e)
            lo[k] = -self.support(-e)
        return Hyperbox.from_bounds(lo, hi)

    def to_json(self) -> dict:
        return {"H": self._H.tolist(), "h": self._h.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "HPolytope":
        return cls(np.asarray(data["H"], dtype=float), np.asarray(data["h"], dtype=float))

    def __repr__(self) -> str:
        return f"HPolytope(dim={self._dim}, rows={self.nrows})"


def _as_polytope(S) -> HPolytope:
    if isinstance(S, Hyperbox):
        return HPolytope.from_box(S)
    return S


def support(P, direction) -> float:
    """Support function of an HPolytope or Hyperbox (analytic for boxes)."""
    if isinstance(P, Hyperbox):
        return P.support(direction)
    return P.support(direction)


def _set_support(S, direction: np.ndarray) -> float:
    if isinstance(S, Hyperbox):
        return S.support(direction)
    return S.support(direction)


def pontryagin_diff(X: HPolytope, S, M: np.ndarray) -> HPolytope:
    """Erode ``X`` by the linear image ``M S``.

    Returns ``{z : H_i z <= h_i - sup_{s in S} (H_i M) s}``; the result may be
    empty, which is a valid polytope rather than an error.  ``S`` must be
    nonempty.
    """
    M = np.asarray(M, dtype=float)
    if isinstance(S, Hyperbox):
        if S.is_empty:
            raise EmptySetError("erosion by an empty set")
        sdim = S.dim
    else:
        if S.is_empty:
            raise EmptySetError("erosion by an empty set")
        sdim = S.dim
    if M.shape != (X.dim, sdim):
        raise ValueError("map shape must be (dim X, dim S)")
    if X.is_empty:
        return HPolytope.empty(X.dim)
    if X.nrows == 0:
        return X
    dirs = X.H @ M
    offsets = np.zeros(X.nrows)
    for i in range(X.nrows):
        try:
            offsets[i] = _set_support(S, dirs[i])
        except UnboundedError:
            return HPolytope.empty(X.dim)
    return HPolytope(X.H, X.h - offsets)


def _dedupe(H: np.ndarray, h: np.ndarray):
    """Drop exact-duplicate rows and dominated rows with equal normals."""
    if H.shape[0] <= 1:
        return H, h
    best: dict = {}
    order: list = []
    for i in range(H.shape[0]):
        key = tuple(np.round(H[i], 10))
        if key in best:
            j = best[key]
            if h[i] < h[j]:
                best[key] = i
        else:
            best[key] = i
            order.append(key)
    idx = [best[key] for key in order]
    return H[idx], h[idx]


def _reduce_arrays(H: np.ndarray, h: np.ndarray):
    """LP-certified irredundant subsystem of an H-system.

    Returns ``None`` when an LP certifies exact infeasibility (which can
    happen for sets the tolerance-based emptiness test calls nonempty).
    """
    H, h = _dedupe(H, h)
    m = H.shape[0]
    if m <= 1:
        return H, h
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        idx = np.flatnonzero(keep)
        b_test = h[idx].copy()
        pos = int(np.flatnonzero(idx == i)[0])
        b_test[pos] += 1.0
        res = linprog_max(H[i], H[idx], b_test)
        if res.status is LPStatus.OPTIMAL and res.objective <= h[i] + _RED_TOL:
            keep[i] = False
        elif res.status is LPStatus.INFEASIBLE:
            return None
    return H[keep], h[keep]


def reduce_rows(P: HPolytope) -> HPolytope:
    """Remove every row whose deletion leaves the set unchanged.

    Certified row by row with an LP (maximize the facet function subject to
    the remaining rows and a relaxed copy of the row itself).  Idempotent.
    """
    if P.is_empty:
        return HPolytope.empty(P.dim)
    reduced = _reduce_arrays(np.array(P.H), np.array(P.h))
    if reduced is None:
        return HPolytope.empty(P.dim)
    return HPolytope(reduced[0], reduced[1])


def _fm_eliminate(H: np.ndarray, h: np.ndarray, col: int):
    """One Fourier-Motzkin step: eliminate column ``col``."""
    a = H[:, col]
    pos = a > _ZERO_TOL
    neg = a < -_ZERO_TOL
    zero = ~(pos | neg)
    rest = np.delete(H, col, axis=1)
    blocks = [rest[zero]]
    rhs = [h[zero]]
    if np.any(pos) and np.any(neg):
        Hp = rest[pos] / a[pos, None]
        hp = h[pos] / a[pos]
        Hn = rest[neg] / a[neg, None]
        hn = h[neg] / a[neg]
        combo = (Hp[:, None, :] - Hn[None, :, :]).reshape(-1, rest.shape[1])
        blocks.append(combo)
        rhs.append((hp[:, None] - hn[None, :]).ravel())
    return np.vstack(blocks), np.concatenate(rhs)


def project(P: HPolytope, keep, row_cap: int = _ROW_CAP) -> HPolytope:
    """Exact shadow of ``P`` onto the coordinates in ``keep``.

    Fourier-Motzkin elimination of the dropped coordinates (cheapest-fill
    first) with interleaved redundancy removal; raises
    :class:`RowBlowupError` if an intermediate iterate exceeds ``row_cap``
    rows after reduction.
    """
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise ValueError("keep indices must be unique")
    if any(k < 0 or k >= P.dim for k in keep):
        raise ValueError("keep indices out of range")
    nkeep = len(keep)
    if nkeep == 0:
        raise ValueError("cannot project onto zero coordinates")
    if P.is_empty:
        return HPolytope.empty(nkeep)
    drop = [j for j in range(P.dim) if j not in keep]
    H = np.array(P.H[:, keep + drop])
    h = np.array(P.h)
    if not drop:
        if H.shape[0]:
            reduced = _reduce_arrays(H, h)
            if reduced is None:
                return HPolytope.empty(nkeep)
            H, h = reduced
        return HPolytope(H, h)

    while H.shape[1] > nkeep:
        # cheapest-fill heuristic over the remaining eliminable columns
        best_col, best_cost = None, None
        for col in range(nkeep, H.shape[1]):
            a = H[:, col]
            npos = int(np.sum(a > _ZERO_TOL))
            nneg = int(np.sum(a < -_ZERO_TOL))
            cost = npos * nneg - (npos + nneg)
            if best_cost is None or cost < best_cost:
                best_col, best_cost = col, cost
        H, h = _fm_eliminate(H, h, best_col)
        cleaned = _clean_rows(H, h)
        if cleaned[2]:
            return HPolytope.empty(nkeep)
        H, h = cleaned[0], cleaned[1]
        if H.shape[0]:
            rho, _ = chebyshev_center(H, h)
            if rho < -1e-9:
                return HPolytope.empty(nkeep)
            reduced = _reduce_arrays(H, h)
            if reduced is None:
                return HPolytope.empty(nkeep)
            H, h = reduced
        if H.shape[0] > row_cap:
            raise RowBlowupError(
                f"projection iterate has {H.shape[0]} rows (cap {row_cap})"
            )
    return HPolytope(H, h)


def contains_set(outer, inner, tol: float = EPS_SET) -> bool:
    """True iff ``inner`` is contained in ``outer`` within tolerance.

    One support LP per facet of ``outer`` over ``inner``; an empty inner set
    is contained in everything.
    """
    outer = _as_polytope(outer)
    inner = _as_polytope(inner)
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch in containment test")
    if inner.is_empty:
        return True
    for i in range(outer.nrows):
        try:
            s = inner.support(outer.H[i])
        except UnboundedError:
            return False
        if s > outer.h[i] + tol:
            return False
    return True


def set_equal(A, B, tol: float = EPS_SET) -> bool:
    """Mutual containment within tolerance."""
    return contains_set(A, B, tol) and contains_set(B, A, tol)


def is_empty(P) -> bool:
    if isinstance(P, Hyperbox):
        return P.is_empty
    return P.is_empty


def contains_point(P, z, tol: float = 1e-7) -> bool:
    if isinstance(P, Hyperbox):
        return P.contains(z, tol)
    return P.contains_point(z, tol)


def volume(P, seed: int = 0, samples: int = 100_000) -> float:
    """Volume of a box (exact) or polytope (hit-or-miss Monte Carlo).

    The Monte Carlo estimate samples uniformly inside the bounding box and is
    deterministic for a given ``seed``.  Unbounded sets raise
    :class:`UnboundedError`.
    """
    if isinstance(P, Hyperbox):
        if P.is_empty:
            return 0.0
        if np.any(~np.isfinite(P.lo)) or np.any(~np.isfinite(P.hi)):
            raise UnboundedError("volume of an unbounded hyperbox")
        return P.volume()
    if P.is_empty:
        return 0.0
    box = P.bounding_box()  # raises UnboundedError when appropriate
    box_vol = box.volume()
    if box_vol == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        batch = min(65536, samples - done)
        pts = box.sample(rng, batch)
        inside = np.all(pts @ P.H.T <= P.h + 0.0, axis=1)
        hits += int(np.count_nonzero(inside))
        done += batch
    return box_vol * hits / samples
