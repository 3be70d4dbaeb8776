"""
Runtime ledger of the bootstrap inequalities and related sanity checks.

Every inequality is evaluated on every frame and reported as a normalized
margin (bound - measured) / bound, so that a negative margin marks a
violation. Nothing in here raises on a failed check.
"""
import logging
import math

import numpy as np

from bhblow import ParameterError
from bhblow.grid import Field, derivative, norms
from bhblow.profile import bar_u_derivs
from bhblow.util.fit import loglog_fit

__all__ = [
    "LEDGER",
    "BootstrapConfig",
    "BootstrapEntry",
    "BootstrapReport",
    "check_blowup_rate_bound",
    "check_bootstrap",
    "check_interpolation",
]

# Identifier, region and source label of every inequality, in report order.
LEDGER = (
    ("near.dev", "near", "eq:tildeUnear0"),
    ("near.dev_x", "near", "eq:1xtildeUnear0"),
    ("near.dev_xx", "near", "eq:2xtildeUnear0"),
    ("near.dev_xxx", "near", "eq:3xtildeUnear0"),
    ("near.dev_xxxx", "near", "eq:4xtildeUnear0"),
    ("origin.dev_xxx", "at-0", "eq:3xtildeUat0"),
    ("origin.u_xxx", "at-0", "eq:3xUat0"),
    ("middle.dev", "middle", "eq:tildeUmiddle"),
    ("middle.dev_x", "middle", "eq:1xtildeUmiddle"),
    ("middle.u_xx", "middle", "eq:2xUmiddle"),
    ("middle.u_xxx", "middle", "eq:3xUmiddle"),
    ("middle.u", "middle", "eq:Umiddle"),
    ("middle.u_x", "middle", "eq:1xUmiddle"),
    ("far.u_x", "far", "eq:1xUfar"),
    ("far.u_xx", "far", "eq:2xUfar"),
    ("far.u_xxx", "far", "eq:3xUfar"),
    ("global.l2_u_x", "global-norm", "eq:1xUL2"),
    ("global.l2_u_xxxxx", "global-norm", "eq:5xUL2"),
    ("global.amplitude", "global-norm", "eq:ULinfty"),
    ("global.slope_extremum", "global-norm", "cor:1xULinfty"),
    ("modulation.tau", "modulation", "eq:taubound"),
    ("modulation.xi", "modulation", "eq:xibound"),
)

HIGH_ORDER_POINTS = 32
INTERPOLATION_TOLERANCE = 1e-12

log = logging.getLogger(__name__)


class BootstrapConfig:
    def __init__(self, M, epsilon):
        self.M = float(M)
        self.epsilon = float(epsilon)
        if not self.M > 1.0:
            raise ParameterError("M must exceed one", M)
        self.l = math.log(self.M) ** -2
        if not self.l < 0.2:
            raise ParameterError("M too small: l = (log M)^-2 must be below 1/5", M)
        if not 0.0 < self.epsilon <= 0.1:
            raise ParameterError("Epsilon must be within (0, 0.1]", epsilon)

    def L_of_s(self, s):
        return 0.5 * math.exp(1.5 * s)

    def __repr__(self):
        return f"<BootstrapConfig M={self.M:g} eps={self.epsilon:g} l={self.l:.4g}>"


def _margin(bound, measured):
    bound = np.asarray(bound, dtype=np.float64)
    measured = np.asarray(measured, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = (bound - measured) / bound
    return np.where(bound > 0, margin, np.where(measured <= 0, 0.0, -np.inf))


class BootstrapEntry:
    def __init__(self, identifier, region, label=None):
        self.identifier = identifier
        self.region = region
        self.label = label
        self.margin = None
        self.X = None
        self.s = None
        self.checked = 0
        self.unchecked = 0
        self.reason = None

    def update(self, margins, X, s):
        margins = np.atleast_1d(margins)
        X = np.broadcast_to(np.atleast_1d(X), margins.shape)
        if margins.size == 0:
            return
        self.checked += 1
        worst = int(np.argmin(margins))
        if self.margin is None or margins[worst] < self.margin:
            self.margin = float(margins[worst])
            self.X = float(X[worst])
            self.s = float(s)

    def skip(self, reason):
        self.unchecked += 1
        self.reason = reason

    @property
    def status(self):
        if self.checked == 0:
            return "unchecked"
        return "pass" if self.margin >= 0.0 else "fail"

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        return {
            "region": self.region,
            "label": self.label,
            "status": self.status,
            "margin": self.margin,
            "X": self.X,
            "s": self.s,
            "frames_checked": self.checked,
            "frames_unchecked": self.unchecked,
            "reason": self.reason,
        }

    def __repr__(self):
        return f"<BootstrapEntry {self.identifier} {self.status}>"


class BootstrapReport:
    def __init__(self, cfg):
        self.cfg = cfg
        self.entries = {
            name: BootstrapEntry(name, region, label) for name, region, label in LEDGER
        }

    def __getitem__(self, identifier):
        return self.entries[identifier]

    def __iter__(self):
        return iter(self.entries.values())

    @property
    def identifiers(self):
        return list(self.entries)

    def counts(self):
        result = {"pass": 0, "fail": 0, "unchecked": 0}
        for entry in self:
            result[entry.status] += 1
        return result

    @property
    def unchecked(self):
        return {e.identifier: e.reason for e in self if e.status == "unchecked"}

    def to_dict(self):
        return {
            "M": self.cfg.M,
            "epsilon": self.cfg.epsilon,
            "l": self.cfg.l,
            "counts": self.counts(),
            "inequalities": {e.identifier: e.to_dict() for e in self},
        }

    COLUMNS = ("identifier", "region", "label", "status", "margin", "X", "s")

    def rows(self):
        return [
            (e.identifier, e.region, e.label, e.status, e.margin, e.X, e.s)
            for e in self
        ]


def _check_frame(report, frame, cfg):
    eps = cfg.epsilon
    M = cfg.M
    l = cfg.l
    s = frame.s
    X = frame.X
    absX = np.abs(X)
    weight = 1.0 + X * X
    ev = bar_u_derivs(X, 5)
    U = {0: frame.U}
    U.update(frame.derivs)
    dev = {j: U[j] - ev[j] for j in range(5)}
    high_order = 1.0 / frame.m >= HIGH_ORDER_POINTS * frame.dx
    skip_reason = (
        f"1/m below {HIGH_ORDER_POINTS} grid spacings, high derivatives unreliable"
    )

    near = absX <= l
    near_scale = eps**0.125 + math.log(M) * eps**0.1
    for j, name in enumerate(("near.dev", "near.dev_x", "near.dev_xx", "near.dev_xxx")):
        bound = near_scale * l ** (4 - j)
        report[name].update(_margin(bound, np.abs(dev[j][near])), X[near], s)
    if high_order:
        report["near.dev_xxxx"].update(
            _margin(eps**0.1, np.abs(dev[4][near])), X[near], s
        )
    else:
        report["near.dev_xxxx"].skip(skip_reason)

    third = frame.origin[3]
    report["origin.dev_xxx"].update(_margin(eps**0.25, abs(third - 6.0)), 0.0, s)
    report["origin.u_xxx"].update(_margin(1.0, abs(third - 6.0)), 0.0, s)

    middle = (absX >= l) & (absX <= cfg.L_of_s(s))
    Xm = X[middle]
    wm = weight[middle]
    checks = (
        ("middle.dev", eps ** (1 / 11) * wm ** (1 / 6), dev[0]),
        ("middle.dev_x", eps ** (1 / 12) * wm ** (-1 / 3), dev[1]),
        ("middle.u_xx", M**0.25 * wm ** (-1 / 3), U[2]),
        ("middle.u_xxx", 0.5 * M**0.75 * np.ones_like(wm), U[3]),
        ("middle.u", (1.0 + eps ** (1 / 11)) * wm ** (1 / 6), U[0]),
        ("middle.u_x", wm ** (-1 / 3), U[1]),
    )
    for name, bound, values in checks:
        report[name].update(_margin(bound, np.abs(values[middle])), Xm, s)

    far_X = cfg.L_of_s(s)
    report["far.u_x"].update(_margin(2.0 * math.exp(-s), frame.far_sup[1]), far_X, s)
    report["far.u_xx"].update(
        _margin(4.0 * M**0.25 * math.exp(-s), frame.far_sup[2]), far_X, s
    )
    report["far.u_xxx"].update(_margin(M**0.75, frame.far_sup[3]), far_X, s)

    report["global.l2_u_x"].update(_margin(10.0, frame.l2[1]), math.nan, s)
    if high_order:
        report["global.l2_u_xxxxx"].update(_margin(M**4, frame.l2[5]), math.nan, s)
    else:
        report["global.l2_u_xxxxx"].skip(skip_reason)
    report["global.amplitude"].update(_margin(M, frame.linf_u), math.nan, s)
    extremum = min(
        float(_margin(1.0, frame.slope_off_origin)),
        float(_margin(1e-6, frame.constraint_residuals[1])),
    )
    report["global.slope_extremum"].update(extremum, 0.0, s)


def _check_modulation(report, track, cfg, Tstar):
    eps = cfg.epsilon
    M = cfg.M
    tau_cap = 2.0 * eps**1.75
    for entry in track:
        s = entry["s"]
        margins = [
            _margin(math.exp(-0.75 * s), abs(entry["dtau_dt"])),
            _margin(tau_cap, abs(entry["tau"])),
        ]
        if Tstar is not None:
            margins.append(_margin(tau_cap, abs(Tstar)))
        report["modulation.tau"].update(np.array(margins, dtype=float), math.nan, s)
        margins = [
            _margin(2.0 * M, abs(entry["dxi_dt"])),
            _margin(3.0 * M * eps, abs(entry["xi"])),
        ]
        report["modulation.xi"].update(np.array(margins, dtype=float), math.nan, s)


def check_bootstrap(frames, track, cfg, Tstar=None):
    """
    Evaluate the full inequality ledger on the frames and on the modulation
    track. Fourth and fifth order items are only evaluated on frames with
    1/m >= 32 dx; other frames are counted as unchecked with the reason.
    """
    report = BootstrapReport(cfg)
    for frame in frames:
        _check_frame(report, frame, cfg)
    if track is not None:
        _check_modulation(report, track, cfg, Tstar)
    for entry in report:
        if entry.status == "unchecked" and entry.reason is None:
            entry.reason = "no frame or track entry available"
    log.info("Bootstrap ledger for %r: %s", cfg, report.counts())
    return report


class InterpolationCheck:
    def __init__(self, order, measured, bound):
        self.order = order
        self.measured = measured
        self.bound = bound
        self.margin = float(_margin(bound, measured))

    @property
    def passed(self):
        return self.margin >= -INTERPOLATION_TOLERANCE

    def to_dict(self):
        return {
            "measured": self.measured,
            "bound": self.bound,
            "margin": self.margin,
            "passed": self.passed,
        }


class InterpolationReport:
    def __init__(self, checks):
        self.checks = checks

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def worst(self):
        return min(check.margin for check in self.checks)

    def to_dict(self):
        return {f"order_{check.order}": check.to_dict() for check in self.checks}


def check_interpolation(u_derivs):
    """
    Check ||d^j u|| <= ||d u||^(1-theta) ||d^5 u||^theta, theta = (j-1)/4,
    for j = 2, 3, 4. Accepts either a Field or its derivatives of orders one
    to five.
    """
    if isinstance(u_derivs, Field):
        u_derivs = [derivative(u_derivs, j) for j in range(1, 6)]
    if len(u_derivs) != 5:
        raise ParameterError("Need the derivatives of orders one to five", len(u_derivs))
    l2 = [norms(f)[0] for f in u_derivs]
    checks = []
    for j in (2, 3, 4):
        theta = (j - 1) / 4.0
        bound = l2[0] ** (1.0 - theta) * l2[4] ** theta
        checks.append(InterpolationCheck(j, l2[j - 1], bound))
    return InterpolationReport(checks)


class RateReport:
    def __init__(self, product, passed, h5_slope):
        self.product = product
        self.passed = passed
        self.h5_slope = h5_slope

    @property
    def h5_trend_ok(self):
        if self.h5_slope is None:
            return None
        return self.h5_slope <= -0.8

    def to_dict(self):
        return {
            "product_min": float(np.min(self.product)),
            "product_max": float(np.max(self.product)),
            "passed": self.passed,
            "h5_slope": self.h5_slope,
            "h5_trend_ok": self.h5_trend_ok,
        }


def check_blowup_rate_bound(series, Tstar, snapshots=None):
    """
    Check 1/2 <= m(t) (T* - t) <= 2 over the final decade of m and, given
    snapshots, the log-log slope of the H^5 norm against T* - t.
    """
    mask = series.final_decade() & (series.t < Tstar)
    if not np.any(mask):
        raise ParameterError("No records before the blowup time estimate", Tstar)
    product = series.m[mask] * (Tstar - series.t[mask])
    passed = bool(np.all((product >= 0.5) & (product <= 2.0)))
    h5_slope = None
    if snapshots:
        times, values = [], []
        for state in snapshots:
            if state.t >= Tstar:
                continue
            m = -float(np.min(derivative(state.u, 1).samples))
            if m <= 0 or 1.0 / m < HIGH_ORDER_POINTS * state.grid.dx:
                continue
            h5 = math.sqrt(
                norms(state.u)[0] ** 2
                + sum(norms(derivative(state.u, j))[0] ** 2 for j in range(1, 6))
            )
            times.append(Tstar - state.t)
            values.append(h5)
        if len(times) >= 2:
            h5_slope = loglog_fit(times, values).slope
    return RateReport(product, passed, h5_slope)
