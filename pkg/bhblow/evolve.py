"""
Time integration of the Burgers-Hilbert equation u_t + u u_x = H[u].

The semi-discrete system is the pseudo-spectral one: the product u u_x is
dealiased by the 2/3 rule and H is the periodic Hilbert multiplier. Classical
RK4 advances it with a step bounded by a CFL condition and by the inverse of
the steepest slope.
"""
import logging
import math

import numpy as np

from bhblow import NumericError, ParameterError, SchemeBlowup
from bhblow.grid import (
    Field,
    dealias,
    dealiased_product,
    derivative,
    interp,
    locate_minimum,
    norms,
)
from bhblow.hilbert import hilbert_multiplier, hilbert_symbol
from bhblow.util.fit import line_fit

__all__ = [
    "MODES",
    "PhysState",
    "StepControl",
    "TimeSeries",
    "TstarFit",
    "BlowupRun",
    "RunResult",
    "choose_dt",
    "extrapolate_Tstar",
    "integrate",
    "linear_solution",
    "observe",
    "rhs",
    "run_to_blowup",
    "step",
]

MODES = ("full", "burgers_only", "linear_only")
MIN_FIT_RECORDS = 20
LOW_CONFIDENCE_R2 = 0.99

log = logging.getLogger(__name__)


def _check_mode(mode):
    if mode not in MODES:
        raise ParameterError("Unknown evolution mode", mode)


class PhysState:
    def __init__(self, t, u):
        self.t = float(t)
        self.u = u

    @property
    def grid(self):
        return self.u.grid

    def __repr__(self):
        return f"<PhysState t={self.t:.12g} on {self.grid!r}>"


class StepControl:
    def __init__(
        self,
        cfl=0.3,
        slope_factor=0.2,
        m_stop=math.inf,
        resolution_guard=8,
        scale_guard=4.0,
        dt_max=1e-2,
        max_steps=1000000,
        t_end=math.inf,
    ):
        self.cfl = float(cfl)
        self.slope_factor = float(slope_factor)
        self.m_stop = float(m_stop)
        self.resolution_guard = resolution_guard
        self.scale_guard = float(scale_guard)
        self.dt_max = float(dt_max)
        self.max_steps = int(max_steps)
        self.t_end = float(t_end)
        for name in ("cfl", "slope_factor", "m_stop", "scale_guard", "dt_max"):
            if not getattr(self, name) > 0:
                raise ParameterError(
                    f"Step control '{name}' must be positive", getattr(self, name)
                )
        if int(resolution_guard) != resolution_guard or resolution_guard <= 0:
            raise ParameterError(
                "Resolution guard must be a positive integer", resolution_guard
            )
        if self.max_steps <= 0:
            raise ParameterError("Maximum step count must be positive", max_steps)

    def to_dict(self):
        return {
            "cfl": self.cfl,
            "slope_factor": self.slope_factor,
            "m_stop": self.m_stop,
            "resolution_guard": self.resolution_guard,
            "scale_guard": self.scale_guard,
            "dt_max": self.dt_max,
            "max_steps": self.max_steps,
            "t_end": self.t_end,
        }

    def stop_reason(self, t, m, dx, steps):
        """
        Return the name of the first criterion that ends a run in the given
        situation or None if the run may continue.
        """
        if m >= self.m_stop:
            return "m_stop"
        if m > 0 and 1.0 / m < self.resolution_guard * dx:
            return "resolution_guard"
        if m > 0 and m**-1.5 < self.scale_guard * dx:
            return "scale_guard"
        if t >= self.t_end:
            return "t_end"
        if steps >= self.max_steps:
            return "max_steps"
        return None


def rhs(u, mode="full"):
    """
    Right hand side of the semi-discrete system in the given mode.
    """
    _check_mode(mode)
    if not u.is_finite:
        raise NumericError("Field contains non-finite samples")
    if mode == "linear_only":
        return hilbert_multiplier(u)
    transport = -dealiased_product(u, derivative(u, 1))
    if mode == "burgers_only":
        return transport
    return transport + hilbert_multiplier(u)


def choose_dt(u, ctl, m=None):
    """
    dt = min(cfl * dx / ||u||_inf, slope_factor / m, dt_max).
    """
    if m is None:
        m = -float(np.min(derivative(u, 1).samples))
    dt = ctl.dt_max
    linf = norms(u)[1]
    if linf > 0:
        dt = min(dt, ctl.cfl * u.grid.dx / linf)
    if m > 0:
        dt = min(dt, ctl.slope_factor / m)
    return dt


def step(state, ctl, mode="full", dt=None):
    """
    Advance the state by one classical RK4 step.
    """
    if dt is None:
        dt = choose_dt(state.u, ctl)
    u = state.u
    k1 = rhs(u, mode)
    try:
        k2 = rhs(u + 0.5 * dt * k1, mode)
        k3 = rhs(u + 0.5 * dt * k2, mode)
        k4 = rhs(u + dt * k3, mode)
    except NumericError as exc:
        raise SchemeBlowup(f"Non-finite stage at t={state.t:.12g}", state) from exc
    new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not new.is_finite:
        raise SchemeBlowup(f"Non-finite values after step at t={state.t:.12g}", state)
    return PhysState(state.t + dt, new)


def integrate(state, t_end, ctl, mode="full"):
    """
    Advance to the fixed time t_end, clipping the last step to land on it.
    """
    while t_end - state.t > 1e-14 * max(1.0, abs(t_end)):
        dt = choose_dt(state.u, ctl)
        if state.t + dt >= t_end:
            state = PhysState(t_end, step(state, ctl, mode, t_end - state.t).u)
        else:
            state = step(state, ctl, mode, dt)
    return state


def linear_solution(u0, t):
    """
    Exact solution of u_t = H[u] on the grid. For zero-mean data this is
    u0 cos t + H[u0] sin t; the mean and the Nyquist mode do not move.
    """
    symbol = hilbert_symbol(u0.grid)
    return Field.from_spectrum(u0.grid, u0.spectrum * np.exp(t * symbol))


def observe(u):
    """
    Locate the steepest negative slope. Returns (m, xi, kappa) with
    m = -u_x(xi) and kappa = u(xi).
    """
    ux = derivative(u, 1)
    uxx = derivative(u, 2)
    uxxx = derivative(u, 3)
    xi = locate_minimum(ux, uxx, uxxx)
    return -interp(ux, xi), xi, interp(u, xi)


class TimeSeries:
    """
    Per-step records of a run: time, steepest slope m, its location xi, the
    value kappa there, the L2 and sup norms of u and the step size.
    """

    COLUMNS = ("t", "m", "xi", "kappa", "l2", "linf", "dt")

    def __init__(self):
        self._records = []
        self._arrays = None

    def append(self, t, m, xi, kappa, l2, linf, dt):
        if self._records and t <= self._records[-1][0]:
            raise ParameterError("Time series must be strictly increasing", t)
        self._records.append((t, m, xi, kappa, l2, linf, dt))
        self._arrays = None

    @classmethod
    def from_columns(cls, columns):
        series = cls()
        for row in zip(*(columns[name] for name in cls.COLUMNS)):
            series.append(*(float(value) for value in row))
        return series

    def __len__(self):
        return len(self._records)

    def __getattr__(self, name):
        if name in TimeSeries.COLUMNS:
            if self._arrays is None:
                table = np.array(self._records, dtype=np.float64).reshape(-1, 7)
                self._arrays = dict(zip(TimeSeries.COLUMNS, table.T))
            return self._arrays[name]
        raise AttributeError(name)

    def rows(self):
        return list(self._records)

    def final_decade(self):
        """
        Boolean mask of the records with m within a factor of ten of the
        final m. If m never grew by a factor of ten, all records are used.
        """
        m = self.m
        if len(m) == 0:
            return np.zeros(0, dtype=bool)
        if m[-1] < 10.0 * m[0]:
            return np.ones(len(m), dtype=bool)
        return m >= m[-1] / 10.0

    def monotone_defect(self):
        """
        Largest relative decrease of m within the final decade.
        """
        m = self.m[self.final_decade()]
        if len(m) < 2:
            return 0.0
        running = np.maximum.accumulate(m)
        return float(np.max((running - m) / running))

    def __repr__(self):
        return f"<TimeSeries with {len(self)} records>"


class TstarFit:
    def __init__(self, fit):
        self.fit = fit
        self.Tstar = fit.root
        self.slope = fit.slope
        self.r2 = fit.r2
        self.count = fit.count

    @property
    def low_confidence(self):
        return self.r2 < LOW_CONFIDENCE_R2

    def __iter__(self):
        return iter((self.Tstar, self.r2))

    def to_dict(self):
        return {
            "Tstar": self.Tstar,
            "slope": self.slope,
            "r2": self.r2,
            "count": self.count,
            "low_confidence": self.low_confidence,
        }

    def __repr__(self):
        return f"<TstarFit T*={self.Tstar:.8g} slope={self.slope:.4g} R2={self.r2:.6f}>"


def extrapolate_Tstar(series):
    """
    Fit 1/m against t over the final decade of m and return the zero of the
    fitted line as the blowup time estimate.
    """
    mask = series.final_decade()
    if np.count_nonzero(mask) < MIN_FIT_RECORDS:
        raise ParameterError(
            f"Need at least {MIN_FIT_RECORDS} records to extrapolate T*",
            int(np.count_nonzero(mask)),
        )
    result = TstarFit(line_fit(series.t[mask], 1.0 / series.m[mask]))
    if result.low_confidence:
        log.warning("Low confidence blowup time fit: %r", result)
    return result


class RunResult:
    def __init__(self, series, snapshots, stop_reason, state, l2_initial):
        self.series = series
        self.snapshots = snapshots
        self.stop_reason = stop_reason
        self.state = state
        self.l2_initial = l2_initial

    def __iter__(self):
        return iter((self.series, self.snapshots))

    @property
    def l2_drift(self):
        return float(np.max(np.abs(self.series.l2 / self.l2_initial - 1.0)))

    def __repr__(self):
        return (
            f"<RunResult {len(self.series)} steps, {len(self.snapshots)} snapshots,"
            f" stopped by {self.stop_reason}>"
        )


class BlowupRun:
    """
    Integrate from u0 until one of the stop criteria of 'ctl' fires. Every
    step is recorded in a TimeSeries and the state is kept as a snapshot
    each time m has grown by another factor 'snapshot_ratio'.
    """

    def __init__(self, u0, ctl, mode="full", t0=0.0, snapshot_ratio=2.0, name=None):
        _check_mode(mode)
        if not snapshot_ratio > 1.0:
            raise ParameterError("Snapshot ratio must exceed one", snapshot_ratio)
        self.u0 = u0
        self.ctl = ctl
        self.mode = mode
        self.t0 = float(t0)
        self.snapshot_ratio = float(snapshot_ratio)
        self.name = name or mode
        self.logger = logging.getLogger(f"Run {self.name}")

    def _record(self, series, state, dt):
        m, xi, kappa = observe(state.u)
        l2, linf = norms(state.u)
        series.append(state.t, m, xi, kappa, l2, linf, dt)
        return m

    def run(self):
        state = PhysState(self.t0, dealias(self.u0))
        series = TimeSeries()
        m = self._record(series, state, 0.0)
        l2_initial = series.l2[0]
        snapshots = [state]
        threshold = m * self.snapshot_ratio
        steps = 0
        self.logger.info(
            "Starting %s run at t=%g with m=%g on %r", self.mode, state.t, m, state.grid
        )
        while True:
            reason = self.ctl.stop_reason(state.t, m, state.grid.dx, steps)
            if reason is not None:
                break
            dt = choose_dt(state.u, self.ctl, m)
            clipped = state.t + dt >= self.ctl.t_end
            if clipped:
                dt = self.ctl.t_end - state.t
            try:
                state = step(state, self.ctl, self.mode, dt)
            except SchemeBlowup:
                self.logger.error("Scheme blew up after %d steps at m=%g", steps, m)
                raise
            if clipped:
                state = PhysState(self.ctl.t_end, state.u)
            steps += 1
            m = self._record(series, state, dt)
            self.logger.debug("Step %d: t=%.12g m=%.8g dt=%.3g", steps, state.t, m, dt)
            if threshold > 0 and m >= threshold:
                snapshots.append(state)
                self.logger.info(
                    "Snapshot %d at t=%.12g, m=%g", len(snapshots) - 1, state.t, m
                )
                while m >= threshold:
                    threshold *= self.snapshot_ratio
        if snapshots[-1] is not state:
            snapshots.append(state)
        self.logger.info(
            "Stopped by %s after %d steps at t=%.12g with m=%g", reason, steps, state.t, m
        )
        return RunResult(series, snapshots, reason, state, l2_initial)


def run_to_blowup(u0, ctl, mode="full", t0=0.0, snapshot_ratio=2.0, name=None):
    return BlowupRun(u0, ctl, mode, t0, snapshot_ratio, name).run()
