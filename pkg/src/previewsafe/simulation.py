"""Closed-loop demonstration of preview value: LQR nominal control on the
augmented system, invariant-set safety supervision, disturbance scripting
with a sliding preview buffer, and trace capture.

The lane-keeping study uses a linearized single-track (bicycle) model at
constant longitudinal speed; the physical parameters and the sample time are
config-exposed because the published study does not fix them, so the
acceptance checks on this scenario are properties (preview-supervised trace
stays safe, no-preview trace does not) rather than trajectory comparisons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    ConfigError,
    RiccatiDivergedError,
    ScriptExhaustedError,
)
from .geometry import HPolytope, Hyperbox, Interval
from .invariance import admissible_inputs, lift, method1, method2
from .systems import LinearSystem, PreviewSystem, augment, step, system_from_config

__all__ = [
    "LQRSpec",
    "Supervisor",
    "SuperviseResult",
    "TraceRecord",
    "Trace",
    "lqr_gain",
    "supervise",
    "rollout",
    "lane_keeping",
    "LaneKeepingResult",
    "bicycle_system",
    "load_simulation_config",
    "zoh_discretize",
]


@dataclass(frozen=True)
class LQRSpec:
    """Riccati recursion parameters: stage costs and convergence budget."""

    Q: np.ndarray
    R: np.ndarray
    max_iter: int = 10_000
    tol: float = 1e-12


def _spectral_radius(M: np.ndarray, iters: int = 400) -> float:
    """Power-iteration estimate of the spectral radius.

    Uses the norm-growth rate ||M^k v||^(1/k), which settles even when the
    dominant eigenvalues form a complex pair.
    """
    n = M.shape[0]
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    log_growth = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        log_growth += np.log(nw)
        v = w / nw
    return float(np.exp(log_growth / iters))


def lqr_gain(sys_aug: LinearSystem, spec: LQRSpec) -> np.ndarray:
    """Gain K of the infinite-horizon regulator via Riccati fixed-point
    iteration; the closed loop A - B K is verified Schur stable.

    Raises :class:`RiccatiDivergedError` if the recursion does not converge
    within ``spec.max_iter`` or the closed loop fails the stability check.
    """
    A, B = sys_aug.A, sys_aug.B
    Q = np.asarray(spec.Q, dtype=float)
    R = np.asarray(spec.R, dtype=float)
    n, m = A.shape[0], B.shape[1]
    if Q.shape != (n, n) or R.shape != (m, m):
        raise ValueError("cost matrix dimensions must match the system")
    P = Q.copy()
    for _ in range(spec.max_iter):
        S = R + B.T @ P @ B
        K = np.linalg.solve(S, B.T @ P @ A)
        Pn = Q + A.T @ P @ A - A.T @ P @ B @ K
        Pn = 0.5 * (Pn + Pn.T)
        if float(np.min(np.linalg.eigvalsh(Pn))) < -1e-9:
            raise RiccatiDivergedError("Riccati iterate lost positive semidefiniteness")
        if float(np.max(np.abs(Pn - P))) <= spec.tol:
            P = Pn
            break
        P = Pn
    else:
        raise RiccatiDivergedError("Riccati recursion did not converge")
    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    if _spectral_radius(A - B @ K) >= 1.0 - 1e-9:
        raise RiccatiDivergedError("closed loop is not Schur stable")
    return K


@dataclass(frozen=True)
class Supervisor:
    """Safety filter: project the nominal input onto the admissible set of an
    invariant set; fall back to the plain input box when that set is empty.

    ``sys`` is the system whose state space the invariant lives in (base or
    augmented), so the rollout can hand over the matching state vector.
    """

    sys: LinearSystem
    invariant: HPolytope
    input_box: Hyperbox


@dataclass(frozen=True)
class SuperviseResult:
    u: np.ndarray
    supervised: bool
    admissible_empty: bool
    admissible: Optional[Interval]  # scalar-input interval; None for m > 1


def _bounds_of_1d(P: HPolytope):
    lo, hi = -np.inf, np.inf
    for a, b in zip(P.H[:, 0], P.h):
        if a > 0.5:
            hi = min(hi, b / a)
        elif a < -0.5:
            lo = max(lo, b / a)
        elif b < -1e-9:  # zero row with negative offset: infeasible marker
            return np.inf, -np.inf
    return lo, hi


def _project_onto(P: HPolytope, z: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Alternating projection onto the facets of a nonempty polytope."""
    z = z.astype(float).copy()
    for _ in range(10_000):
        resid = P.H @ z - P.h
        worst = int(np.argmax(resid))
        if resid[worst] <= tol:
            return z
        z -= resid[worst] * P.H[worst]
    return z


def supervise(sup: Supervisor, state, u_nom) -> SuperviseResult:
    """Project ``u_nom`` onto the admissible input set at ``state``.

    When the admissible set is empty the nominal input is clamped to the
    fallback input box and the result is annotated ``admissible_empty``.
    """
    u_nom = np.atleast_1d(np.asarray(u_nom, dtype=float))
    adm = admissible_inputs(sup.sys, sup.invariant, state)
    m = sup.sys.m

    def fallback() -> SuperviseResult:
        clamped = np.minimum(np.maximum(u_nom, sup.input_box.lo), sup.input_box.hi)
        return SuperviseResult(
            u=clamped, supervised=True, admissible_empty=True,
            admissible=Interval.EMPTY if m == 1 else None,
        )

    if m == 1:
        lo, hi = _bounds_of_1d(adm)
        if lo > hi:
            # width-zero sets can cross by rounding noise; snap to the point
            if lo - hi <= 1e-7:
                lo = hi = 0.5 * (lo + hi)
            else:
                return fallback()
        u = float(np.clip(u_nom[0], lo, hi))
        return SuperviseResult(
            u=np.array([u]),
            supervised=bool(abs(u - u_nom[0]) > 0.0),
            admissible_empty=False,
            admissible=Interval(lo, hi),
        )
    if adm.is_empty:
        return fallback()
    if adm.contains_point(u_nom, tol=1e-9):
        return SuperviseResult(u=u_nom, supervised=False, admissible_empty=False, admissible=None)
    z = _project_onto(adm, u_nom)
    return SuperviseResult(u=z, supervised=True, admissible_empty=False, admissible=None)


@dataclass(frozen=True)
class TraceRecord:
    t: int
    x: np.ndarray
    u_nominal: np.ndarray
    u_applied: np.ndarray
    d_applied: np.ndarray
    admissible: Optional[Interval]
    supervised: bool
    safe: bool


@dataclass
class Trace:
    """Time-indexed rollout record; ``safe`` marks (x, u) in the safe set."""

    records: list = field(default_factory=list)

    def append(self, rec: TraceRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def all_safe(self) -> bool:
        return all(r.safe for r in self.records)

    def first_unsafe_step(self) -> Optional[int]:
        for r in self.records:
            if not r.safe:
                return r.t
        return None

    def supervision_count(self) -> int:
        return sum(1 for r in self.records if r.supervised)

    def to_csv(self) -> str:
        if not self.records:
            return ""
        n = self.records[0].x.shape[0]
        m = self.records[0].u_applied.shape[0]
        l = self.records[0].d_applied.shape[0]

        def fmt(v: float) -> str:
            return format(float(v), ".17g")

        cols = ["t"]
        cols += [f"x{i+1}" for i in range(n)]
        cols += (["u_nom"] if m == 1 else [f"u_nom{i+1}" for i in range(m)])
        cols += (["u"] if m == 1 else [f"u{i+1}" for i in range(m)])
        cols += [f"d{i+1}" for i in range(l)]
        cols += ["supervised", "safe", "adm_lo", "adm_hi"]
        lines = [",".join(cols)]
        for r in self.records:
            row = [str(r.t)]
            row += [fmt(v) for v in r.x]
            row += [fmt(v) for v in r.u_nominal]
            row += [fmt(v) for v in r.u_applied]
            row += [fmt(v) for v in r.d_applied]
            row.append("1" if r.supervised else "0")
            row.append("1" if r.safe else "0")
            if r.admissible is None or r.admissible.is_empty:
                row += ["nan", "nan"]
            else:
                row += [fmt(r.admissible.lo), fmt(r.admissible.hi)]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


Controller = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


def rollout(
    sys: LinearSystem,
    p: int,
    controller: Controller,
    supervisor: Optional[Supervisor],
    x0,
    d_script,
    T: int,
) -> Trace:
    """Closed-loop simulation with a sliding p-step preview window.

    At each t the controller observes (x(t), d_script[t .. t+p-1]) and the
    dynamics consume d_script[t]; the script therefore needs at least T + p
    entries (:class:`ScriptExhaustedError` otherwise).
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    script = np.asarray(d_script, dtype=float).reshape(-1, sys.l)
    if script.shape[0] < T + p:
        raise ScriptExhaustedError(
            f"script holds {script.shape[0]} steps, need {T + p}"
        )
    trace = Trace()
    for t in range(T):
        window = script[t : t + p]
        u_nom = np.atleast_1d(np.asarray(controller(t, x, window), dtype=float))
        if supervisor is not None:
            state_for_sup = (
                np.concatenate([x, window.ravel()])
                if supervisor.sys.n == sys.n + p * sys.l
                else x
            )
            res = supervise(supervisor, state_for_sup, u_nom)
            u, supervised, adm = res.u, res.supervised, res.admissible
        else:
            u, supervised, adm = u_nom, False, None
        safe = sys.safe.contains_point(np.concatenate([x, u]), tol=1e-7)
        trace.append(
            TraceRecord(
                t=t, x=x.copy(), u_nominal=u_nom.copy(), u_applied=np.atleast_1d(u).copy(),
                d_applied=script[t].copy(), admissible=adm,
                supervised=bool(supervised), safe=bool(safe),
            )
        )
        x = step(sys, x, u, script[t])
    return trace


def zoh_discretize(Ac: np.ndarray, Bc: np.ndarray, Ec: np.ndarray, dt: float, tol: float = 1e-12):
    """Zero-order-hold discretization by truncated matrix-exponential series."""
    n = Ac.shape[0]
    Ad = np.eye(n)
    term = np.eye(n)
    k = 1
    while True:
        term = term @ (Ac * dt) / k
        Ad = Ad + term
        if float(np.max(np.abs(term))) < tol:
            break
        k += 1
        if k > 400:
            raise RiccatiDivergedError("matrix exponential series did not settle")
    S = np.eye(n) * dt
    term = np.eye(n) * dt
    k = 1
    while True:
        term = term @ (Ac * dt) / (k + 1)
        S = S + term
        if float(np.max(np.abs(term))) < tol:
            break
        k += 1
        if k > 400:
            raise RiccatiDivergedError("matrix exponential series did not settle")
    return Ad, S @ Bc, S @ Ec


def bicycle_system(model: dict, bounds: dict) -> LinearSystem:
    """Discretized single-track lateral model at constant speed.

    States: lateral displacement y, lateral velocity v, yaw angle error, yaw
    rate.  The disturbance is the road-curvature yaw-rate term entering the
    yaw-angle equation; the input is the steering angle.
    """
    try:
        mass = float(model["mass"])
        inertia = float(model["yaw_inertia"])
        lf = float(model["lf"])
        lr = float(model["lr"])
        cf = float(model["cf"])
        cr = float(model["cr"])
        speed = float(model["speed"])
        dt = float(model.get("dt", 0.1))
        y_max = float(bounds["y"])
        v_max = float(bounds["v"])
        yaw_max = float(bounds["yaw"])
        rate_max = float(bounds["yaw_rate"])
        steer_max = float(bounds["steer"])
        rd_max = float(bounds["rd"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed bicycle config: {exc}") from exc

    Ac = np.array(
        [
            [0.0, 1.0, speed, 0.0],
            [0.0, -(cf + cr) / (mass * speed), 0.0, (cr * lr - cf * lf) / (mass * speed) - speed],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, (cr * lr - cf * lf) / (inertia * speed), 0.0, -(cf * lf**2 + cr * lr**2) / (inertia * speed)],
        ]
    )
    Bc = np.array([[0.0], [cf / mass], [0.0], [cf * lf / inertia]])
    Ec = np.array([[0.0], [0.0], [-1.0], [0.0]])
    Ad, Bd, Ed = zoh_discretize(Ac, Bc, Ec, dt)

    state_bounds = np.array([y_max, v_max, yaw_max, rate_max])
    H = np.vstack(
        [
            np.hstack([np.eye(4), np.zeros((4, 1))]),
            np.hstack([-np.eye(4), np.zeros((4, 1))]),
            [[0.0, 0.0, 0.0, 0.0, 1.0]],
            [[0.0, 0.0, 0.0, 0.0, -1.0]],
        ]
    )
    h = np.concatenate([state_bounds, state_bounds, [steer_max, steer_max]])
    return LinearSystem(
        A=Ad, B=Bd, E=Ed,
        dist_set=Hyperbox.from_bounds([-rd_max], [rd_max]),
        safe=HPolytope(H, h),
    )


def load_simulation_config(source: Union[str, dict]):
    """Accept a path or dict; generic system schema or bicycle-model schema.

    Returns ``(LinearSystem, lqr_options: dict)``.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    else:
        data = source
    if not isinstance(data, dict):
        raise ConfigError("simulation config must be a JSON object")
    lqr_opts = data.get("lqr", {})
    if "A" in data:
        sys, _ = system_from_config(data)
        return sys, lqr_opts
    if "model" in data and "bounds" in data:
        return bicycle_system(data["model"], data["bounds"]), lqr_opts
    raise ConfigError("config must provide either matrices or a bicycle model")


@dataclass
class LaneKeepingResult:
    sys: LinearSystem
    p: int
    cmax0: HPolytope
    cio: HPolytope
    gap_found: bool
    gap_state: Optional[np.ndarray]
    trace_preview: Optional[Trace]
    trace_no_preview: Optional[Trace]
    script: Optional[np.ndarray]


def _augmented_lqr(preview: PreviewSystem, lqr_opts: dict) -> np.ndarray:
    aug = preview.aug
    n_base = preview.base.n
    q_diag = np.zeros(aug.n)
    q_state = lqr_opts.get("q_state")
    if q_state is None:
        q_diag[:n_base] = 1.0
    else:
        q_diag[:n_base] = np.asarray(q_state, dtype=float)
    Q = np.diag(q_diag)
    R = np.atleast_2d(np.asarray(lqr_opts.get("r", 1.0), dtype=float)) * np.eye(aug.m)
    return lqr_gain(aug, LQRSpec(Q=Q, R=R))


def _find_gap_state(seed: HPolytope, grown: HPolytope, slack_tol: float = 1e-4):
    """LP search of grown \\ seed: maximize each seed facet over the grown set
    and keep the deepest violation, backed off toward the interior of the
    grown set (a boundary vertex would start the rollout with degenerate
    admissible sets)."""
    best_slack = -np.inf
    best_point = None
    best_row = None
    for i in range(seed.nrows):
        res = grown.maximize(seed.H[i])
        if res.point is None:
            continue
        slack = res.objective - seed.h[i]
        if slack > best_slack:
            best_slack, best_point, best_row = slack, res.point, i
    if best_point is None or best_slack <= slack_tol:
        return None, None
    normal = seed.H[best_row]
    center = grown.feasible_point()
    center_slack = float(normal @ center - seed.h[best_row])
    # largest interior blend that keeps at least half the facet violation
    target = 0.5 * best_slack
    if center_slack >= target:
        t = 1.0
    else:
        t = (best_slack - target) / (best_slack - center_slack)
    point = best_point + t * (center - best_point)
    return point, normal


def _candidate_scripts(
    preview_d: np.ndarray,
    dist: Hyperbox,
    push_dir: Optional[np.ndarray],
    E: np.ndarray,
    total: int,
    seed: int,
) -> list:
    """Deterministic disturbance scripts: extreme-value candidates first
    (constant vertex aligned with / against the violated facet), then an
    alternating pattern, then seeded random vertices."""
    l = dist.dim
    p = preview_d.shape[0]
    lo, hi = dist.lo, dist.hi
    if push_dir is not None and E.size:
        impact = E.T @ push_dir[: E.shape[0]]
        aligned = np.where(impact >= 0, hi, lo)
    else:
        aligned = hi
    opposed = lo + hi - aligned

    def tail(pattern: Callable[[int], np.ndarray]) -> np.ndarray:
        rows = [pattern(t) for t in range(total - p)]
        return np.vstack([preview_d, np.array(rows).reshape(-1, l)])

    rng = np.random.default_rng(seed)
    candidates = [
        tail(lambda t: aligned),
        tail(lambda t: opposed),
        tail(lambda t: aligned if (t // 2) % 2 == 0 else opposed),
    ]
    picks = rng.integers(0, 2, size=(total - p, l))
    candidates.append(
        np.vstack([preview_d, np.where(picks == 1, hi, lo)])
    )
    return candidates


def lane_keeping(
    config: Union[str, dict],
    p: int = 5,
    T: int = 100,
    seed: int = 0,
    K: int = 10,
    max_iter: int = 200,
) -> LaneKeepingResult:
    """The preview-value demonstration: grow the no-preview invariant set
    under p-step preview, pick a start in the grown set but outside the
    lifted no-preview set, and roll out both supervisors on one disturbance
    script.

    The script is chosen adversarially for the no-preview supervisor among a
    deterministic family of extreme-disturbance candidates (the study only
    fixes the start state, not the disturbances); the preview-supervised
    trace is safe for any script by invariance.  When the grown set does not
    strictly contain the lifted seed the result reports ``gap_found=False``
    instead of failing.
    """
    sys, lqr_opts = load_simulation_config(config)
    cmax0 = method1(sys, max_iter).result
    preview = augment(sys, p)
    seed_set = lift(cmax0, sys.dist_set, p)
    grown = method2(preview.aug, seed_set, K).result

    gap_state, push_dir = _find_gap_state(seed_set, grown)
    if gap_state is None:
        return LaneKeepingResult(
            sys=sys, p=p, cmax0=cmax0, cio=grown, gap_found=False,
            gap_state=None, trace_preview=None, trace_no_preview=None, script=None,
        )

    n, l = sys.n, sys.l
    x0 = gap_state[:n]
    preview_d = gap_state[n:].reshape(p, l)

    gain = _augmented_lqr(preview, lqr_opts)

    def controller(t: int, x: np.ndarray, window: np.ndarray) -> np.ndarray:
        xi = np.concatenate([x, window.ravel()])
        return -gain @ xi

    input_box = _input_box_of(sys)
    sup_preview = Supervisor(sys=preview.aug, invariant=grown, input_box=input_box)
    sup_plain = Supervisor(sys=sys, invariant=cmax0, input_box=input_box)

    chosen = None
    chosen_trace = None
    for script in _candidate_scripts(
        preview_d, sys.dist_set, push_dir, sys.E, T + p, seed
    ):
        trace = rollout(sys, p, controller, sup_plain, x0, script, T)
        if chosen is None:
            chosen, chosen_trace = script, trace
        if not trace.all_safe:
            chosen, chosen_trace = script, trace
            break
    trace_preview = rollout(sys, p, controller, sup_preview, x0, chosen, T)
    return LaneKeepingResult(
        sys=sys, p=p, cmax0=cmax0, cio=grown, gap_found=True,
        gap_state=gap_state, trace_preview=trace_preview,
        trace_no_preview=chosen_trace, script=chosen,
    )


def _input_box_of(sys: LinearSystem) -> Hyperbox:
    """Input bounds read off the safe set (fallback for empty admissibility)."""
    lo = np.full(sys.m, -np.inf)
    hi = np.full(sys.m, np.inf)
    Hu = sys.safe.H[:, sys.n :]
    Hx = sys.safe.H[:, : sys.n]
    for i in range(sys.safe.nrows):
        if np.any(np.abs(Hx[i]) > 1e-12):
            continue
        for j in range(sys.m):
            a = Hu[i, j]
            others = np.abs(np.delete(Hu[i], j)).sum() if sys.m > 1 else 0.0
            if abs(a) > 1e-12 and others <= 1e-12:
                bound = sys.safe.h[i] / a
                if a > 0:
                    hi[j] = min(hi[j], bound)
                else:
                    lo[j] = max(lo[j], bound)
    lo = np.where(np.isfinite(lo), lo, -1e6)
    hi = np.where(np.isfinite(hi), hi, 1e6)
    return Hyperbox.from_bounds(lo, hi)
