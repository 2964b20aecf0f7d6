"""Batch command-line front door.

Subcommands::

    check      nonemptiness verdict for a shift-register problem
    invariant  run Method 1/2 or emit the closed form on a (p-augmented) system
    sweep-c    largest tolerable symmetric disturbance bound per preview time
    bounds     inner/outer volume bounds for preview-time selection
    simulate   supervised lane-keeping rollouts (preview vs no preview)

Exit codes: 0 success/nonempty, 3 empty-result verdict, 2 usage or config
error, 1 internal numerical failure.  Every command is deterministic given
its flags and seed.  Set PREVIEWSAFE_LOG=DEBUG|INFO|... for diagnostics.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import logging
import os
import sys
from typing import Optional

from . import brunovsky as bk
from . import casestudies as cs
from .errors import ConfigError, PreviewSafeError
from .geometry import HPolytope, Hyperbox
from .invariance import lift, method1, method2, preview_gain
from .jsonio import dumps_17g, format_float
from .simulation import lane_keeping
from .systems import BrunovskyProblem, augment, system_from_config

logger = logging.getLogger("previewsafe")

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2
EXIT_EMPTY = 3


def _setup_logging() -> None:
    level = os.environ.get("PREVIEWSAFE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _write_output(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _emit_flat(data: dict, args) -> None:
    """Write a flat result dict as JSON (default) or two-column CSV."""
    if getattr(args, "format", "json") == "csv":
        lines = ["key,value"]
        for key, val in data.items():
            if isinstance(val, bool):
                lines.append(f"{key},{'true' if val else 'false'}")
            elif isinstance(val, float):
                lines.append(f"{key},{format_float(val)}")
            else:
                lines.append(f"{key},{val}")
        _write_output("\n".join(lines) + "\n", args.out)
    else:
        _write_output(dumps_17g(data), args.out)


def _bundled_config(name: str) -> dict:
    ref = importlib.resources.files("previewsafe") / "configs" / f"{name}.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def _case_system(name: str, preview: int):
    """Canned systems runnable by name; returns (system, method2 seed or None)."""
    if name == "example1":
        sys_, seed = cs.example1_config(p=preview)
        return sys_, seed
    if name == "example2":
        return cs.ScalarPreviewProblem(2.0, 1.0, 1.0, 2.0, max(preview, 1)).system(), None
    if name == "example4":
        return cs.example4_config(), None
    if name == "example5":
        prob = cs.ScalarPreviewProblem(2.0, 1.0, 1.0, 2.0, max(preview, 1))
        return cs.example5_config(prob)[0], None
    raise ConfigError(f"unknown case {name!r} (try example1/example2/example4/example5)")


def _brunovsky_problem_from_args(args) -> BrunovskyProblem:
    if args.system:
        data = _load_json(args.system)
        if "n" in data and "box" in data:
            n = int(data["n"])
            box = Hyperbox.from_json(data["box"])
            dist_data = data.get("disturbance")
            if dist_data is None:
                raise ConfigError("brunovsky config needs a disturbance set")
            if "H" in dist_data:
                dist = HPolytope.from_json(dist_data)
            else:
                dist = Hyperbox.from_json(dist_data)
            p = int(args.preview if args.preview is not None else data.get("preview", 0))
            return BrunovskyProblem.create(n, box, dist, p)
        raise ConfigError("check expects a shift-register config with n/box/disturbance")
    if args.n is None or args.c is None:
        raise ConfigError("check needs either --system FILE or --n and --c")
    n = int(args.n)
    p = int(args.preview or 0)
    box = Hyperbox.cube(n, float(args.box_halfwidth))
    return BrunovskyProblem.create(n, box, Hyperbox.cube(n, float(args.c)), p)


def cmd_check(args) -> int:
    problem = _brunovsky_problem_from_args(args)
    ineq = bk.nonempty_ineq(problem)
    verdict = {"nonempty": ineq, "n": problem.n, "p": problem.p, "test": "inequality"}
    if min(problem.p, problem.n) <= args.vertex_cap:
        vert = bk.nonempty_vertex(problem, cap=args.vertex_cap)
        verdict["vertex_test"] = vert
        verdict["agreement"] = vert == ineq
    _emit_flat(verdict, args)
    return EXIT_OK if ineq else EXIT_EMPTY


def cmd_invariant(args) -> int:
    preview = int(args.preview or 0)
    seed_set = None
    if args.case:
        sys_, seed_set = _case_system(args.case, preview)
    elif args.system:
        data = _load_json(args.system)
        if "n" in data and "box" in data and "A" not in data:
            problem = _brunovsky_problem_from_args(args)
            sys_ = problem.system()
            if args.closed_form:
                inv = bk.closed_form(problem)
                _write_output(dumps_17g(inv.to_json()), args.out)
                return EXIT_OK
        else:
            sys_, cfg_preview = system_from_config(data)
            if args.preview is None:
                preview = cfg_preview
    else:
        raise ConfigError("invariant needs --case NAME or --system FILE")

    if args.closed_form:
        raise ConfigError("--closed-form applies to shift-register configs only")
    if args.format == "csv":
        raise ConfigError("invariant emits nested JSON; csv is not available")

    aug = augment(sys_, preview).aug
    if args.method == 2:
        if seed_set is None:
            if args.seed_set:
                seed_set = HPolytope.from_json(_load_json(args.seed_set))
            else:
                base_max = method1(sys_, args.max_iter).result
                seed_set = lift(base_max, sys_.dist_set, preview)
        report = method2(aug, seed_set, args.K)
    else:
        report = method1(aug, args.max_iter)
    _write_output(dumps_17g(report.to_json()), args.out)
    return EXIT_EMPTY if report.result.is_empty else EXIT_OK


def cmd_sweep_c(args) -> int:
    n = int(args.n)
    box = Hyperbox.cube(n, float(args.box_halfwidth))
    lines = ["p,largest_c"]
    for p in range(int(args.p_max) + 1):
        c = bk.largest_c(n, p, box, tol=args.tol)
        lines.append(f"{p},{format_float(c)}")
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    preview = int(args.preview or 1)
    if args.case:
        sys_, _ = _case_system(args.case, preview)
    elif args.system:
        sys_, _ = system_from_config(_load_json(args.system))
    else:
        raise ConfigError("bounds needs --case NAME or --system FILE")
    result = preview_gain(
        sys_, int(args.p_low), preview, seed=args.seed, samples=args.samples,
        max_iter=args.max_iter,
    )
    _emit_flat(result, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.case and args.case != "lane_keeping":
        raise ConfigError("simulate supports --case lane_keeping or --system FILE")
    if args.system:
        config = _load_json(args.system)
    else:
        config = _bundled_config("lane_keeping")
    preview = int(args.preview if args.preview is not None else 5)
    res = lane_keeping(config, p=preview, T=args.T, seed=args.seed, K=args.K,
                       max_iter=args.max_iter)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    summary = {
        "gap_found": res.gap_found,
        "preview": res.p,
        "T": args.T,
        "seed": args.seed,
    }
    if res.gap_found:
        preview_path = os.path.join(outdir, "trace_preview.csv")
        plain_path = os.path.join(outdir, "trace_no_preview.csv")
        with open(preview_path, "w", encoding="utf-8") as handle:
            handle.write(res.trace_preview.to_csv())
        with open(plain_path, "w", encoding="utf-8") as handle:
            handle.write(res.trace_no_preview.to_csv())
        summary.update(
            {
                "trace_preview": os.path.basename(preview_path),
                "trace_no_preview": os.path.basename(plain_path),
                "first_unsafe_preview": res.trace_preview.first_unsafe_step(),
                "first_unsafe_no_preview": res.trace_no_preview.first_unsafe_step(),
                "supervision_count_preview": res.trace_preview.supervision_count(),
                "supervision_count_no_preview": res.trace_no_preview.supervision_count(),
                "gap_state": [float(v) for v in res.gap_state],
            }
        )
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8") as handle:
        handle.write(dumps_17g(summary))
    return EXIT_OK if res.gap_found else EXIT_EMPTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="previewsafe",
        description="Controlled invariant sets for linear systems with disturbance preview",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_case: bool = True) -> None:
        if with_case:
            p.add_argument("--case", help="canned case name (example1/2/4/5, lane_keeping)")
            p.add_argument("--system", help="system or problem config file (JSON)")
        p.add_argument("--preview", type=int, default=None, help="preview time p")
        p.add_argument("--max-iter", dest="max_iter", type=int, default=200)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p_check = sub.add_parser("check", help="nonemptiness verdict (shift-register form)")
    common(p_check)
    p_check.add_argument("--n", type=int, help="state dimension for --c parametrization")
    p_check.add_argument("--c", type=float, help="symmetric disturbance halfwidth")
    p_check.add_argument("--box-halfwidth", type=float, default=1.0)
    p_check.add_argument("--vertex-cap", dest="vertex_cap", type=int, default=20)
    p_check.set_defaults(func=cmd_check)

    p_inv = sub.add_parser("invariant", help="compute an invariant set")
    common(p_inv)
    p_inv.add_argument("--method", type=int, choices=[1, 2], default=1)
    p_inv.add_argument("--closed-form", dest="closed_form", action="store_true")
    p_inv.add_argument("--K", type=int, default=10, help="method 2 iteration budget")
    p_inv.add_argument("--seed-set", dest="seed_set", help="method 2 seed polytope (JSON)")
    p_inv.add_argument("--n", type=int)
    p_inv.add_argument("--c", type=float)
    p_inv.add_argument("--box-halfwidth", type=float, default=1.0)
    p_inv.set_defaults(func=cmd_invariant)

    p_sweep = sub.add_parser("sweep-c", help="largest disturbance bound per preview time")
    common(p_sweep, with_case=False)
    p_sweep.add_argument("--n", type=int, required=True)
    p_sweep.add_argument("--p-max", dest="p_max", type=int, required=True)
    p_sweep.add_argument("--box-halfwidth", type=float, default=1.0)
    p_sweep.set_defaults(func=cmd_sweep_c)

    p_bounds = sub.add_parser("bounds", help="inner/outer preview volume bounds")
    common(p_bounds)
    p_bounds.add_argument("--p-low", dest="p_low", type=int, required=True)
    p_bounds.add_argument("--samples", type=int, default=200_000)
    p_bounds.set_defaults(func=cmd_bounds)

    p_sim = sub.add_parser("simulate", help="supervised rollouts with/without preview")
    common(p_sim)
    p_sim.add_argument("--T", type=int, default=100)
    p_sim.add_argument("--K", type=int, default=10)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreviewSafeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
