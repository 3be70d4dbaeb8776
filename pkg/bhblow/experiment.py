"""
The make-data, evolve, selfsim and verify stages and the experiments built
from them.

run_experiment() executes all stages for one configuration and leaves every
table, snapshot and report in a run directory; sweep() repeats it across a
list of amplitudes in worker processes.
"""
import concurrent.futures
import glob
import logging
import os
import time

import numpy as np

from bhblow import BlowupError, ConfigError, NumericError, ParameterError, ResolutionError
from bhblow.config import load_config
from bhblow.evolve import (
    BlowupRun,
    PhysState,
    TimeSeries,
    extrapolate_Tstar,
    linear_solution,
)
from bhblow.grid import Field, SpectralGrid, dealias, norms
from bhblow.initial import audit_u0, build_u0
from bhblow.selfsim import (
    RESOLVED_POINTS,
    ModulationTrack,
    build_track,
    convergence_to_profile,
    cusp_exponent,
    estimate_x_star,
    extract_frame,
    frame_speed,
    lagrangian_check,
    modulation_residuals,
    resolved_frames,
)
from bhblow.util.fit import loglog_fit
from bhblow.util.snapshot import read_snapshot, write_snapshot
from bhblow.util.table import read_csv, read_json, write_csv, write_json
from bhblow.verify import (
    BootstrapConfig,
    check_blowup_rate_bound,
    check_bootstrap,
    check_interpolation,
)

__all__ = [
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_PARTIAL",
    "EXIT_NUMERIC",
    "BlowupReport",
    "RunDirectory",
    "SelfSimResult",
    "SweepResult",
    "load_run",
    "make_data",
    "run_experiment",
    "selfsim_stage",
    "sweep",
    "verify_stage",
    "write_run",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_NUMERIC = 4

SWEEP_COLUMNS = (
    "epsilon",
    "status",
    "Tstar",
    "lifespan",
    "nu_hat",
    "cusp_exponent",
    "window_sup_dist",
    "bootstrap_fail",
    "error",
)

log = logging.getLogger(__name__)


class RunDirectory:
    """
    Output directory of one run. Every file written through it is recorded
    so that the final report can list it.
    """

    def __init__(self, path):
        self.path = path
        self.artifacts = []
        os.makedirs(path, exist_ok=True)

    def join(self, name):
        return os.path.join(self.path, name)

    def _written(self, name):
        if name not in self.artifacts:
            self.artifacts.append(name)
        log.debug("Wrote %s", self.join(name))
        return name

    def csv(self, name, columns, rows):
        write_csv(self.join(name), columns, rows)
        return self._written(name)

    def json(self, name, data):
        write_json(self.join(name), data)
        return self._written(name)

    def snapshot(self, name, state):
        write_snapshot(self.join(name), state.u.samples, state.grid.half_width, state.t)
        return self._written(name)

    def record(self):
        """
        Add the files written through this directory to the artifact list
        of report.json, creating a bare report if there is none yet.
        """
        path = self.join("report.json")
        report = read_json(path) if os.path.exists(path) else {}
        listed = list(report.get("artifacts", []))
        for name in self.artifacts + ["report.json"]:
            if name not in listed:
                listed.append(name)
        report["artifacts"] = listed
        write_json(path, report)
        log.debug("Recorded %d artifacts in %s", len(listed), path)
        return report


class BlowupReport:
    """
    Summary of one experiment. Each field holds a value or is null with the
    reason recorded in 'reasons'.
    """

    FIELDS = (
        "name",
        "mode",
        "stop_reason",
        "steps",
        "Tstar",
        "slope",
        "r2",
        "Tstar_low_confidence",
        "Tstar_reference",
        "x_star",
        "nu_hat",
        "cusp_exponent",
        "cusp_r2",
        "window_sup_dist",
        "bootstrap",
        "l2_drift",
        "rate_bound",
        "linear_deviation",
        "wall_time",
    )

    def __init__(self, name, mode):
        self.values = dict.fromkeys(self.FIELDS)
        self.reasons = {}
        self.status = EXIT_OK
        self.error = None
        self.artifacts = []
        self.set("name", name)
        self.set("mode", mode)

    def set(self, field, value):
        if field not in self.values:
            raise ParameterError("Unknown report field", field)
        self.values[field] = value
        self.reasons.pop(field, None)

    def skip(self, field, reason):
        self.set(field, None)
        self.reasons[field] = reason

    def __getitem__(self, field):
        return self.values[field]

    def to_dict(self):
        reasons = dict(self.reasons)
        fallback = self.error or "not computed"
        for field, value in self.values.items():
            if value is None and field not in reasons:
                reasons[field] = fallback
        return {
            "status": self.status,
            "error": self.error,
            "values": dict(self.values),
            "null_reasons": reasons,
            "artifacts": list(self.artifacts),
        }

    def rows(self):
        return [
            (field, self.values[field], self.reasons.get(field, ""))
            for field in self.FIELDS
        ]

    def __repr__(self):
        return f"<BlowupReport {self.values['name']} status={self.status}>"


def make_data(config):
    """
    Build the initial data of a configuration and audit it. The audit is
    None for the two-mode family.
    """
    spec = config.data_spec()
    u0 = build_u0(spec, config.spectral_grid())
    audit = audit_u0(u0, spec) if spec.family == "profile" else None
    if audit is not None and not audit.passed:
        log.warning("Initial data fail the audit: %s", ", ".join(audit.failures))
    return spec, u0, audit


def write_run(run_dir, result):
    run_dir.csv("timeseries.csv", TimeSeries.COLUMNS, result.series.rows())
    for idx, state in enumerate(result.snapshots):
        run_dir.snapshot(f"snap_{idx:03d}.bhf", state)


def load_state(path):
    samples, half_width, t = read_snapshot(path)
    grid = SpectralGrid(samples.size, half_width)
    return PhysState(t, Field(grid, samples))


def load_run(path):
    """
    Read the time series and the snapshots written by write_run().
    """
    series = TimeSeries.from_columns(read_csv(os.path.join(path, "timeseries.csv")))
    names = sorted(glob.glob(os.path.join(path, "snap_*.bhf")))
    if not names:
        raise ParameterError("Run directory holds no snapshots", path)
    return series, [load_state(name) for name in names]


class SelfSimResult:
    def __init__(self, track):
        self.track = track
        self.frames = []
        self.entries = []
        self.skipped = []
        self.modulation = None
        self.convergence = None
        self.cusp = None
        self.x_star = None
        self.reasons = {}

    def convergence_dict(self):
        result = {"skipped_frames": self.skipped, "reasons": self.reasons}
        if self.convergence is not None:
            result["convergence"] = self.convergence.to_dict()
        if self.modulation is not None:
            result["modulation"] = self.modulation.to_dict()
        return result

    def cusp_dict(self):
        result = {"x_star": self.x_star, "reason": self.reasons.get("cusp")}
        if self.cusp is not None:
            result.update(self.cusp.to_dict())
        return result

    def frame_rows(self):
        rows = []
        for frame in self.frames:
            rows.extend(frame.rows())
        return rows


def selfsim_stage(series, snapshots, mode, window=10.0, epsilon=None, Tstar=None):
    """
    Build the modulation track, extract one frame per snapshot where the
    resolution allows it and measure the convergence to the profile and the
    cusp exponent at the blowup point.
    """
    result = SelfSimResult(build_track(series, snapshots, mode))
    for state, entry in zip(snapshots, result.track):
        try:
            frame = extract_frame(state, entry, window)
        except ResolutionError as exc:
            log.info("No frame at t=%.12g: %s", state.t, exc)
            result.skipped.append({"t": state.t, "reason": str(exc)})
            continue
        result.frames.append(frame)
        result.entries.append(entry)
    try:
        result.modulation = modulation_residuals(result.track)
    except ParameterError as exc:
        result.reasons["modulation"] = str(exc)
    try:
        result.convergence = convergence_to_profile(result.frames, window, epsilon)
    except ParameterError as exc:
        result.reasons["convergence"] = str(exc)
    if Tstar is None:
        result.reasons["cusp"] = "no blowup time estimate"
    else:
        result.x_star = estimate_x_star(series, Tstar)
        try:
            result.cusp = cusp_exponent(snapshots[-1], result.x_star)
        except (ParameterError, ResolutionError) as exc:
            result.reasons["cusp"] = str(exc)
    return result


def write_selfsim(run_dir, sim):
    run_dir.csv("frames.csv", ("s", "X", "U"), sim.frame_rows())
    run_dir.csv("modulation.csv", ModulationTrack.COLUMNS, sim.track.rows())
    run_dir.json("convergence.json", sim.convergence_dict())
    run_dir.json("cusp.json", sim.cusp_dict())


def verify_stage(sim, cfg, series, snapshots, Tstar=None, seeds=(), span=1.0):
    """
    Evaluate the bootstrap ledger, the interpolation inequalities on every
    snapshot, the blowup rate sandwich and the Lagrangian bounds.
    """
    ledger = check_bootstrap(sim.frames, sim.track, cfg, Tstar)
    result = {"ledger": ledger.to_dict(), "reasons": {}}
    result["interpolation"] = []
    for state in snapshots:
        check = check_interpolation(state.u)
        entry = check.to_dict()
        entry.update(t=state.t, passed=check.passed, worst=check.worst)
        result["interpolation"].append(entry)
    if Tstar is None:
        result["rate_bound"] = None
        result["reasons"]["rate_bound"] = "no blowup time estimate"
    else:
        result["rate_bound"] = check_blowup_rate_bound(series, Tstar, snapshots).to_dict()
    if len(sim.frames) >= 2 and seeds:
        V = frame_speed(sim.frames, sim.entries)
        s0 = sim.frames[0].s
        s1 = min(s0 + span, sim.frames[-1].s)
        result["lagrangian"] = lagrangian_check(V, seeds, s0, s1, cfg.M, cfg.l).to_dict()
    else:
        result["lagrangian"] = None
        result["reasons"]["lagrangian"] = "needs two frames and at least one seed"
    return ledger, result


def _pipeline(config, run_dir, report):
    run_dir.json("config.json", config.to_dict())
    spec, u0, audit = make_data(config)
    run_dir.snapshot("u0.bhf", PhysState(spec.t0, u0))
    if audit is not None:
        run_dir.json("audit.json", audit.to_dict())

    run = BlowupRun(
        u0, config.step_control(), config.mode, spec.t0, config.snapshot_ratio, config.name
    )
    result = run.run()
    series = result.series
    write_run(run_dir, result)
    report.set("stop_reason", result.stop_reason)
    report.set("steps", len(series) - 1)
    report.set("l2_drift", result.l2_drift)

    no_blowup = "linear_only mode has no blowup"
    if config.mode == "linear_only":
        expected = linear_solution(dealias(u0), result.state.t - spec.t0)
        report.set("linear_deviation", norms(result.state.u - expected)[1])
        for field in BlowupReport.FIELDS:
            if report[field] is None and field != "wall_time":
                report.skip(field, no_blowup)
        return EXIT_OK
    report.skip("linear_deviation", "only computed in linear_only mode")

    Tstar = None
    try:
        fit = extrapolate_Tstar(series)
    except ParameterError as exc:
        for field in ("Tstar", "slope", "r2", "Tstar_low_confidence"):
            report.skip(field, str(exc))
    else:
        Tstar = fit.Tstar
        report.set("Tstar", fit.Tstar)
        report.set("slope", fit.slope)
        report.set("r2", fit.r2)
        report.set("Tstar_low_confidence", fit.low_confidence)
    if config.mode == "burgers_only":
        # Along the steepest characteristic 1/m decreases at unit rate.
        report.set("Tstar_reference", spec.t0 + 1.0 / series.m[0])
    else:
        report.skip("Tstar_reference", "closed form only without the Hilbert term")

    sim = selfsim_stage(series, result.snapshots, config.mode, config.window, spec.epsilon, Tstar)
    write_selfsim(run_dir, sim)
    if sim.x_star is not None:
        report.set("x_star", sim.x_star)
    else:
        report.skip("x_star", sim.reasons["cusp"])
    if sim.cusp is not None:
        report.set("cusp_exponent", sim.cusp.exponent)
        report.set("cusp_r2", sim.cusp.r2)
    else:
        report.skip("cusp_exponent", sim.reasons["cusp"])
        report.skip("cusp_r2", sim.reasons["cusp"])

    if not sim.frames:
        reason = "resolution guard hit before any frame could be extracted"
        for field in ("nu_hat", "window_sup_dist", "bootstrap", "rate_bound"):
            report.skip(field, reason)
        log.warning("%s: %s", config.name, reason)
        return EXIT_PARTIAL
    resolved = resolved_frames(sim.frames)
    if resolved:
        report.set("nu_hat", resolved[-1].nu_hat)
        report.set("window_sup_dist", resolved[-1].window_sup_dist)
    else:
        reason = f"no frame spans {RESOLVED_POINTS} grid spacings"
        report.skip("nu_hat", reason)
        report.skip("window_sup_dist", reason)

    if spec.family != "profile":
        reason = "the bootstrap ledger is defined for the profile family"
        report.skip("bootstrap", reason)
        report.skip("rate_bound", reason)
        return EXIT_OK
    cfg = BootstrapConfig(config.bootstrap_M, spec.epsilon)
    ledger, checks = verify_stage(
        sim,
        cfg,
        series,
        result.snapshots,
        Tstar,
        config.verify["lagrangian_seeds"],
        config.verify["lagrangian_span"],
    )
    run_dir.json("bootstrap.json", checks)
    report.set("bootstrap", ledger.counts())
    if checks["rate_bound"] is None:
        report.skip("rate_bound", checks["reasons"]["rate_bound"])
    else:
        report.set("rate_bound", checks["rate_bound"]["passed"])
    return EXIT_OK


def run_experiment(source, output=None):
    """
    Run every stage for a configuration (a RunConfig, preset name, JSON path
    or dictionary) and return the exit status together with the report.
    Invalid configurations raise ConfigError before anything is written.
    """
    config = load_config(source)
    started = time.monotonic()
    run_dir = RunDirectory(config.output_dir(output))
    report = BlowupReport(config.name, config.mode)
    log.info("Running %r into %s", config, run_dir.path)
    try:
        report.status = _pipeline(config, run_dir, report)
    except NumericError as exc:
        log.error("%s failed: %s", config.name, exc)
        report.error = str(exc)
        report.status = EXIT_NUMERIC
    report.set("wall_time", time.monotonic() - started)
    report.artifacts = run_dir.artifacts + ["report.json"]
    run_dir.json("report.json", report.to_dict())
    log.info("Finished %s with status %d", config.name, report.status)
    return report.status, report


def read_report(path):
    return read_json(os.path.join(path, "report.json"))


def _sweep_one(raw, output):
    try:
        status, report = run_experiment(raw, output)
    except ConfigError as exc:
        return {"status": EXIT_CONFIG, "error": str(exc)}
    except BlowupError as exc:
        return {"status": EXIT_NUMERIC, "error": str(exc)}
    row = dict(report.values)
    row.update(status=status, error=report.error)
    return row


class SweepResult:
    def __init__(self, family, rows, fit, reason=None):
        self.family = family
        self.rows = rows
        self.fit = fit
        self.reason = reason

    @property
    def slope(self):
        if self.fit is None:
            return None
        return self.fit.slope

    def to_dict(self):
        return {
            "family": self.family,
            "quantity": "lifespan" if self.family == "two-mode" else "|Tstar|",
            "slope": self.slope,
            "r2": None if self.fit is None else self.fit.r2,
            "reason": self.reason,
            "runs": self.rows,
        }


def sweep(source, epsilons, output=None, workers=None):
    """
    Run one experiment per epsilon in a process pool and fit the log-log
    slope of |T*| (profile family) or of the lifespan T* - t0 (two-mode
    family) against epsilon. Failed runs leave a row with the error.
    """
    epsilons = [float(eps) for eps in epsilons]
    if len(epsilons) < 3:
        raise ParameterError("A sweep needs at least three epsilon values", len(epsilons))
    config = load_config(source)
    base = RunDirectory(config.output_dir(output))
    family = config.data["family"]
    rows = {}
    jobs = {}
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for eps in epsilons:
            try:
                variant = config.replace(
                    **{"data.epsilon": eps, "name": f"{config.name}-eps{eps:g}"}
                )
            except ConfigError as exc:
                rows[eps] = {"status": EXIT_CONFIG, "error": str(exc)}
                continue
            out = base.join(f"eps_{eps:g}")
            jobs[eps] = (variant.data_spec().t0, pool.submit(_sweep_one, variant.to_dict(), out))
        for eps, (t0, future) in jobs.items():
            try:
                row = future.result()
            except Exception as exc:
                log.exception("Sweep run at eps=%g crashed", eps)
                row = {"status": EXIT_NUMERIC, "error": repr(exc)}
            row["t0"] = t0
            rows[eps] = row

    table = []
    for eps in epsilons:
        row = rows[eps]
        Tstar = row.get("Tstar")
        lifespan = None if Tstar is None else Tstar - row["t0"]
        bootstrap = row.get("bootstrap") or {}
        table.append(
            (
                eps,
                row["status"],
                Tstar,
                lifespan,
                row.get("nu_hat"),
                row.get("cusp_exponent"),
                row.get("window_sup_dist"),
                bootstrap.get("fail"),
                row.get("error") or "",
            )
        )
    base.csv("sweep.csv", SWEEP_COLUMNS, table)

    column = 3 if family == "two-mode" else 2
    points = [(r[0], r[column]) for r in table if r[column] is not None and r[column] != 0]
    fit, reason = None, None
    if len(points) >= 2:
        x, y = np.array(points, dtype=np.float64).T
        fit = loglog_fit(x, y)
        log.info("Sweep slope %.4g (R2 %.4g) over %d runs", fit.slope, fit.r2, fit.count)
    else:
        reason = f"only {len(points)} runs produced a blowup time"
    result = SweepResult(family, [dict(zip(SWEEP_COLUMNS, r)) for r in table], fit, reason)
    base.json("sweep.json", result.to_dict())
    return result
