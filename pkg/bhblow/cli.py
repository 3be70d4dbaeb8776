import argparse
import json
import logging
import math
import os
import sys

from bhblow import BlowupError, ConfigError, NumericError, VerificationFailure
from bhblow.config import PRESETS
from bhblow.evolve import MODES, BlowupRun, StepControl, extrapolate_Tstar
from bhblow.experiment import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_PARTIAL,
    RunDirectory,
    load_run,
    load_state,
    read_report,
    run_experiment,
    selfsim_stage,
    sweep,
    verify_stage,
    write_run,
    write_selfsim,
)
from bhblow.grid import SpectralGrid
from bhblow.initial import DataSpec, audit_u0, build_u0, default_grid_size
from bhblow.profile import check_profile_bounds, default_samples, profile_table
from bhblow.util.snapshot import write_snapshot
from bhblow.util.table import render, write_csv
from bhblow.verify import BootstrapConfig, BootstrapReport

log = logging.getLogger(__name__)


def _print_json(data):
    print(json.dumps(data, indent=2, sort_keys=True, default=float))


def _data_spec(args):
    return DataSpec(
        args.epsilon,
        M=args.M,
        cutoff_inner=args.cutoff_inner,
        cutoff_outer=args.cutoff_outer,
        kappa0=args.kappa0,
        nu=args.nu,
        perturbation=args.perturbation,
        seed=args.seed,
        family=args.family,
    )


def cmd_make_data(args):
    spec = _data_spec(args)
    half_width = args.half_width
    if half_width is None:
        half_width = math.pi if spec.family == "two-mode" else 4.0
    n = args.n if args.n is not None else default_grid_size(spec, half_width)
    grid = SpectralGrid(n, half_width)
    u0 = build_u0(spec, grid)
    write_snapshot(args.output, u0.samples, grid.half_width, spec.t0)
    log.info("Wrote %r on %r to %s", spec, grid, args.output)
    return EXIT_OK


def cmd_audit_data(args):
    state = load_state(args.snapshot)
    report = audit_u0(state.u, _data_spec(args))
    _print_json(report.to_dict())
    return EXIT_OK


def cmd_evolve(args):
    state = load_state(args.data)
    ctl = StepControl(
        cfl=args.cfl,
        slope_factor=args.slope_factor,
        m_stop=args.m_stop,
        resolution_guard=args.resolution_guard,
        scale_guard=args.scale_guard,
        dt_max=args.dt_max,
        max_steps=args.max_steps,
        t_end=args.t_end,
    )
    name = os.path.basename(os.path.normpath(args.out))
    result = BlowupRun(state.u, ctl, args.mode, state.t, args.snapshot_ratio, name).run()
    run_dir = RunDirectory(args.out)
    write_run(run_dir, result)
    summary = {"mode": args.mode, "stop_reason": result.stop_reason}
    try:
        summary.update(extrapolate_Tstar(result.series).to_dict())
    except BlowupError as exc:
        summary["Tstar"] = None
        summary["reason"] = str(exc)
    summary["artifacts"] = run_dir.artifacts + ["report.json"]
    run_dir.json("report.json", summary)
    _print_json(summary)
    return EXIT_OK


def _fit_Tstar(series):
    try:
        return extrapolate_Tstar(series).Tstar
    except BlowupError as exc:
        log.warning("No blowup time estimate: %s", exc)
        return None


def cmd_selfsim(args):
    series, snapshots = load_run(args.run)
    sim = selfsim_stage(
        series, snapshots, args.mode, args.window, args.epsilon, _fit_Tstar(series)
    )
    run_dir = RunDirectory(args.run)
    write_selfsim(run_dir, sim)
    run_dir.record()
    if not sim.frames:
        log.error("No snapshot was resolved well enough for a frame")
        return EXIT_PARTIAL
    rows = [(f.s, f.nu_hat, f.window_sup_dist, f.resolved) for f in sim.frames]
    print(render(["s", "nu_hat", "sup_dist", "resolved"], rows))
    return EXIT_OK


def cmd_bootstrap_check(args):
    series, snapshots = load_run(args.run)
    Tstar = _fit_Tstar(series)
    sim = selfsim_stage(series, snapshots, args.mode, args.window, args.epsilon, Tstar)
    if not sim.frames:
        log.error("No snapshot was resolved well enough for a frame")
        return EXIT_PARTIAL
    cfg = BootstrapConfig(args.M, args.epsilon)
    ledger, checks = verify_stage(sim, cfg, series, snapshots, Tstar)
    run_dir = RunDirectory(args.run)
    run_dir.json("bootstrap.json", checks)
    run_dir.record()
    print(render(BootstrapReport.COLUMNS, ledger.rows()))
    return EXIT_OK


def cmd_profile_check(args):
    X = default_samples(args.xmax, args.samples)
    try:
        report = check_profile_bounds(X)
    except VerificationFailure as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    run_dir = RunDirectory(args.out)
    run_dir.json("profile.json", report.to_dict())
    columns = ["X"] + ["U"] + [f"U_{j}" for j in range(1, 6)]
    write_csv(run_dir.join("profile.csv"), columns, profile_table(X))
    _print_json(report.to_dict())
    return EXIT_OK


def cmd_sweep(args):
    result = sweep(args.config, args.epsilons, args.out, args.workers)
    rows = [
        (row["epsilon"], row["status"], row["Tstar"], row["nu_hat"], row["cusp_exponent"])
        for row in result.rows
    ]
    print(render(["epsilon", "status", "Tstar", "nu_hat", "cusp"], rows))
    if result.fit is None:
        print(f"no slope: {result.reason}")
    else:
        print(f"log-log slope {result.slope:.4f} (R2 {result.fit.r2:.4f})")
    return EXIT_OK


def cmd_report(args):
    report = read_report(args.run)
    # evolve writes a flat report, run a sectioned one
    values = report.get("values", report)
    reasons = report.get("null_reasons", {})
    rows = [
        (name, value if value is not None else "null", reasons.get(name, ""))
        for name, value in sorted(values.items())
        if name != "artifacts"
    ]
    print(render(["field", "value", "reason"], rows))
    return report.get("status", EXIT_OK)


def cmd_run(args):
    status, report = run_experiment(args.config, args.out)
    print(render(["field", "value", "reason"], report.rows()))
    return status


def _add_data_arguments(parser):
    parser.add_argument("--epsilon", type=float, required=True)
    parser.add_argument("--M", type=float, default=50.0)
    parser.add_argument("--nu", type=float, default=6.0)
    parser.add_argument("--cutoff-inner", type=float, default=0.5)
    parser.add_argument("--cutoff-outer", type=float, default=1.0)
    parser.add_argument("--kappa0", type=float, default=0.0)
    parser.add_argument("--perturbation", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--family", choices=("profile", "two-mode"), default="profile")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bhblow", description="Burgers-Hilbert blowup laboratory"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("make-data", help="write initial data as a snapshot")
    _add_data_arguments(sub)
    sub.add_argument(
        "--n", type=int, default=None, help="grid size, derived from epsilon if unset"
    )
    sub.add_argument(
        "--half-width", type=float, default=None, help="4, or pi for two-mode data"
    )
    sub.add_argument("-o", "--output", required=True)
    sub.set_defaults(func=cmd_make_data)

    sub = commands.add_parser("audit-data", help="check initial data")
    sub.add_argument("snapshot")
    _add_data_arguments(sub)
    sub.set_defaults(func=cmd_audit_data)

    sub = commands.add_parser("evolve", help="integrate up to a stop criterion")
    sub.add_argument("--data", required=True)
    sub.add_argument("--mode", choices=MODES, default="full")
    sub.add_argument("--cfl", type=float, default=0.3)
    sub.add_argument("--slope-factor", type=float, default=0.2)
    sub.add_argument("--m-stop", type=float, default=float("inf"))
    sub.add_argument("--resolution-guard", type=int, default=8)
    sub.add_argument("--scale-guard", type=float, default=4.0)
    sub.add_argument("--dt-max", type=float, default=1e-2)
    sub.add_argument("--max-steps", type=int, default=1000000)
    sub.add_argument("--t-end", type=float, default=float("inf"))
    sub.add_argument("--snapshot-ratio", type=float, default=1.25)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=cmd_evolve)

    for name, func, text in (
        ("selfsim", cmd_selfsim, "self-similar frames of a run"),
        ("bootstrap-check", cmd_bootstrap_check, "bootstrap inequality ledger"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--run", required=True)
        sub.add_argument("--window", type=float, default=10.0)
        sub.add_argument("--mode", choices=MODES, default="full")
        sub.set_defaults(func=func)
        if name == "bootstrap-check":
            sub.add_argument("--M", type=float, default=50.0)
            sub.add_argument("--epsilon", type=float, required=True)
        else:
            sub.add_argument("--epsilon", type=float, default=None)

    sub = commands.add_parser("profile-check", help="verify the profile bounds")
    sub.add_argument("--xmax", type=float, default=1e4)
    sub.add_argument("--samples", type=int, default=20000)
    sub.add_argument("--out", default=".")
    sub.set_defaults(func=cmd_profile_check)

    sub = commands.add_parser("sweep", help="repeat a run over several epsilons")
    sub.add_argument("config", help=f"JSON file or one of {', '.join(PRESETS)}")
    sub.add_argument("--epsilons", type=float, nargs="+", required=True)
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_sweep)

    sub = commands.add_parser("report", help="show the report of a run")
    sub.add_argument("--run", required=True)
    sub.set_defaults(func=cmd_report)

    sub = commands.add_parser("run", help="run every stage for a configuration")
    sub.add_argument("config", help=f"JSON file or one of {', '.join(PRESETS)}")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG
    except NumericError as exc:
        log.error("Numeric failure: %s", exc)
        return EXIT_NUMERIC
    except BlowupError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
