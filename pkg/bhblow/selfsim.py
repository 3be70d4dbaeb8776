"""
Modulated self-similar variables.

With m = -u_x(xi, t) the steepest slope, the frame is fixed by

    tau - t = 1/m,   s = log m,   X = (x - xi) m^(3/2),
    U(X, s) = m^(1/2) (u(x, t) - kappa),

so that U(0) = 0, U_X(0) = -1 and U_XX(0) = 0. Derivatives transform as
d^j_X U = m^(1/2 - 3j/2) d^j_x u and L2 norms as
||d^j_X U|| = m^(5/4 - 3j/2) ||d^j_x u||.
"""
import logging
import math

import numpy as np
from scipy.interpolate import CubicSpline

from bhblow import ParameterError, ResolutionError
from bhblow.evolve import observe
from bhblow.grid import derivative, interp_many, norms
from bhblow.hilbert import hilbert_multiplier
from bhblow.profile import bar_u, rescaled
from bhblow.util.fit import line_fit, loglog_fit

__all__ = [
    "ModulationTrack",
    "SelfSimilarFrame",
    "SpeedField",
    "build_track",
    "convergence_to_profile",
    "cusp_exponent",
    "estimate_x_star",
    "extract_frame",
    "resolved_frames",
    "fit_cusp_exponent",
    "frame_speed",
    "lagrangian_check",
    "modulation_residuals",
    "steady_speed",
]

FRAME_SCALE_GUARD = 4.0
# Frames whose length m^(-3/2) spans fewer grid spacings carry no headline value.
RESOLVED_POINTS = 16
FRAME_SAMPLES = 256
FRAME_MIN_X = 1e-3
FAR_DISTANCE = 0.5
MAX_ORDER = 5

log = logging.getLogger(__name__)


def _scale(m, order):
    return m ** (0.5 - 1.5 * order)


class ModulationTrack:
    """
    Modulation variables at each snapshot of a run, together with their
    measured time derivatives and the rates predicted from the Hilbert
    transform of the solution at xi.
    """

    COLUMNS = (
        "t",
        "xi",
        "kappa",
        "m",
        "tau",
        "s",
        "dxi_dt",
        "dtau_dt",
        "h_ux",
        "h_uxx",
        "uxxx",
        "xi_dot",
        "tau_dot",
    )

    def __init__(self, mode):
        self.mode = mode
        self.entries = []

    def append(self, **entry):
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, index):
        return self.entries[index]

    def column(self, name):
        return np.array([entry[name] for entry in self.entries], dtype=np.float64)

    def rows(self):
        return [[entry[name] for name in self.COLUMNS] for entry in self.entries]


def _rates(series):
    """
    Spline derivatives of xi and tau = t + 1/m along the per-step series.
    """
    t = series.t
    if len(t) < 2:

        def zero(when):
            return np.zeros_like(np.asarray(when, dtype=np.float64))

        return zero, zero
    xi_rate = CubicSpline(t, series.xi).derivative()
    tau_rate = CubicSpline(t, t + 1.0 / series.m).derivative()
    return xi_rate, tau_rate


def predicted_rates(mode, m, kappa, h_ux, h_uxx, uxxx):
    """
    Return (xi_dot, tau_dot) from the modulation equations
    tau' = H[u_x](xi) / m^2 and xi' = kappa - H[u_xx](xi) / u_xxx(xi).
    """
    if mode == "burgers_only":
        return kappa, 0.0
    if mode == "linear_only":
        return math.nan, math.nan
    return kappa - h_uxx / uxxx, h_ux / (m * m)


def build_track(series, snapshots, mode="full"):
    xi_rate, tau_rate = _rates(series)
    track = ModulationTrack(mode)
    for state in snapshots:
        u = state.u
        m, xi, kappa = observe(u)
        ux = derivative(u, 1)
        uxx = derivative(u, 2)
        uxxx_field = derivative(u, 3)
        h_ux, h_uxx, uxxx = interp_many(
            [hilbert_multiplier(ux), hilbert_multiplier(uxx), uxxx_field], xi
        )
        h_ux, h_uxx, uxxx = float(h_ux), float(h_uxx), float(uxxx)
        xi_dot, tau_dot = predicted_rates(mode, m, kappa, h_ux, h_uxx, uxxx)
        track.append(
            t=state.t,
            xi=xi,
            kappa=kappa,
            m=m,
            tau=state.t + 1.0 / m,
            s=math.log(m),
            dxi_dt=float(xi_rate(state.t)),
            dtau_dt=float(tau_rate(state.t)),
            h_ux=h_ux,
            h_uxx=h_uxx,
            uxxx=uxxx,
            xi_dot=xi_dot,
            tau_dot=tau_dot,
        )
    return track


class ModulationReport:
    def __init__(self, s, xi_residual, tau_residual, tau_margin, xi_agreement):
        self.s = s
        self.xi_residual = xi_residual
        self.tau_residual = tau_residual
        self.tau_margin = tau_margin
        self.xi_agreement = xi_agreement

    @property
    def tau_bound_holds(self):
        return bool(np.all(self.tau_margin >= 0.0))

    def to_dict(self):
        return {
            "s": self.s,
            "xi_residual": self.xi_residual,
            "tau_residual": self.tau_residual,
            "tau_margin": self.tau_margin,
            "xi_agreement": self.xi_agreement,
            "tau_bound_holds": self.tau_bound_holds,
        }

    def rows(self):
        return list(zip(self.s, self.xi_residual, self.tau_residual, self.tau_margin))


def modulation_residuals(track, settle=3.0, tolerance=0.1):
    """
    Compare the measured rates of xi and tau with the predicted ones.

    'xi_residual' is relative to the larger of both rates, 'tau_residual' is
    absolute, since the predicted rate of tau vanishes without the Hilbert
    source. 'tau_margin' is the normalized margin of |dtau/dt| <= e^(-3s/4),
    'xi_agreement' tells whether the relative xi residual is within
    'tolerance' once s has advanced by 'settle' beyond its initial value.
    """
    if len(track) < 5:
        raise ParameterError("Need at least five snapshots", len(track))
    s = track.column("s")
    measured_xi = track.column("dxi_dt")
    predicted_xi = track.column("xi_dot")
    scale = np.maximum(np.maximum(np.abs(measured_xi), np.abs(predicted_xi)), 1e-300)
    xi_residual = np.abs(measured_xi - predicted_xi) / scale
    tau_residual = np.abs(track.column("dtau_dt") - track.column("tau_dot"))
    bound = np.exp(-0.75 * s)
    tau_margin = (bound - np.abs(track.column("dtau_dt"))) / bound
    settled = s - s[0] >= settle
    if np.any(settled):
        xi_agreement = bool(np.all(xi_residual[settled] <= tolerance))
    else:
        xi_agreement = None
    return ModulationReport(s, xi_residual, tau_residual, tau_margin, xi_agreement)


class SelfSimilarFrame:
    """
    The solution at one instant seen in self-similar variables. 'derivs'
    maps the order j to d^j_X U at the points X, 'l2' to ||d^j_X U||_L2 and
    'far_sup' to sup |d^j_X U| over |X| >= e^(3s/2)/2 (on grid nodes).
    """

    def __init__(self, **fields):
        self.__dict__.update(fields)

    @property
    def resolved(self):
        return self.m**-1.5 >= RESOLVED_POINTS * self.dx

    @property
    def constraint_residuals(self):
        """
        Residuals of U(0) = 0, U_X(0) = -1 and U_XX(0) = 0.
        """
        origin = self.origin
        return (abs(origin[0]), abs(origin[1] + 1.0), abs(origin[2]))

    def sup_distance(self, window, nu=None):
        """
        sup over |X| <= window of |U - Ubar_nu| with nu defaulting to nu_hat.
        """
        if nu is None:
            nu = self.nu_hat
        if not nu > 0:
            return math.nan
        inside = np.abs(self.X) <= window
        return float(np.max(np.abs(self.U[inside] - rescaled(nu, self.X[inside]))))

    def rows(self):
        return [(self.s, X, U) for X, U in zip(self.X, self.U)]

    def __repr__(self):
        return f"<SelfSimilarFrame s={self.s:.6g} nu_hat={self.nu_hat:.6g}>"


def extract_frame(state, entry=None, window=10.0, samples=FRAME_SAMPLES):
    """
    Transform a physical state into self-similar variables. 'entry' is the
    matching ModulationTrack entry; without it the modulation variables are
    measured from the state.
    """
    u = state.u
    grid = u.grid
    if entry is None:
        m, xi, kappa = observe(u)
    else:
        m, xi, kappa = entry["m"], entry["xi"], entry["kappa"]
    if not m > 0:
        raise ResolutionError("No negative slope to build a frame on", 0.0)
    length = m**-1.5
    if length < FRAME_SCALE_GUARD * grid.dx:
        raise ResolutionError(
            f"Self-similar length {length:.3g} is below {FRAME_SCALE_GUARD:g} grid"
            " spacings; trustworthy |X| up to",
            0.0,
        )
    cap = min(0.5, grid.half_width - abs(xi)) / length
    if window > cap:
        raise ResolutionError(f"Window {window:g} exceeds the box; |X| up to", cap)

    fields = [u] + [derivative(u, order) for order in range(1, MAX_ORDER + 1)]
    positive = np.logspace(np.log10(FRAME_MIN_X), np.log10(cap), samples)
    X = np.concatenate([-positive[::-1], [0.0], positive])
    values = interp_many(fields, xi + X * length)
    origin = interp_many(fields, xi)
    U = math.sqrt(m) * (values[0] - kappa)
    derivs = {j: _scale(m, j) * values[j] for j in range(1, MAX_ORDER + 1)}
    origin = [math.sqrt(m) * (float(origin[0]) - kappa)] + [
        _scale(m, j) * float(origin[j]) for j in range(1, MAX_ORDER + 1)
    ]

    distance = np.abs(grid.wrap(grid.nodes - xi))
    far = distance >= FAR_DISTANCE
    off_origin = distance > 2.0 * grid.dx
    far_sup = {}
    for j in (1, 2, 3):
        samples_j = np.abs(fields[j].samples[far])
        far_sup[j] = _scale(m, j) * float(np.max(samples_j, initial=0.0))
    l2 = {0: m**1.25 * norms(u)[0]}
    for j in range(1, MAX_ORDER + 1):
        l2[j] = m ** (1.25 - 1.5 * j) * norms(fields[j])[0]
    slope_off_origin = float(np.max(np.abs(fields[1].samples[off_origin]))) / m

    nu_hat = origin[3]
    frame = SelfSimilarFrame(
        t=state.t,
        s=math.log(m),
        m=m,
        xi=xi,
        kappa=kappa,
        X=X,
        U=U,
        derivs=derivs,
        origin=origin,
        nu_hat=nu_hat,
        window=window,
        cap=cap,
        l2=l2,
        far_sup=far_sup,
        linf_u=norms(u)[1],
        slope_off_origin=slope_off_origin,
        dx=grid.dx,
    )
    frame.window_sup_dist = frame.sup_distance(window)
    log.debug("Extracted %r, sup distance %.3g", frame, frame.window_sup_dist)
    return frame


def resolved_frames(frames):
    """
    The frames whose self-similar length spans RESOLVED_POINTS grid spacings.
    """
    return [frame for frame in frames if frame.resolved]


class ConvergenceReport:
    def __init__(self, s, nu_hat, increments, sup_dist, resolved, monotone, nu_error, nu_ok):
        self.s = s
        self.nu_hat = nu_hat
        self.increments = increments
        self.sup_dist = sup_dist
        self.resolved = resolved
        self.monotone = monotone
        self.nu_error = nu_error
        self.nu_ok = nu_ok

    def to_dict(self):
        return dict(self.__dict__)


def convergence_to_profile(frames, window=10.0, epsilon=None, tolerance=0.1):
    """
    Report how the frames approach the rescaled profile: the series of
    nu_hat with its increments, the distance sup_{|X|<=window}|U - Ubar_nu|
    and whether that distance is nonincreasing over the last three resolved
    frames. With 'epsilon' given, |nu - 6| on the last resolved frame is
    compared with the larger of eps^(1/4) and the last increment of nu_hat
    between resolved frames. Unresolved frames stay in the series but are
    never judged.
    """
    resolved = np.array([frame.resolved for frame in frames], dtype=bool)
    count = int(np.count_nonzero(resolved))
    if count < 4:
        raise ParameterError("Need at least four resolved frames", count)
    s = np.array([frame.s for frame in frames])
    span = s[resolved][-1] - s[resolved][0]
    if span < 2.0:
        raise ParameterError("Resolved frames must span at least two units of s", span)
    nu_hat = np.array([frame.nu_hat for frame in frames])
    increments = np.abs(np.diff(nu_hat))
    sup_dist = np.array([frame.sup_distance(window) for frame in frames])
    last = sup_dist[resolved][-3:]
    monotone = bool(np.all(last[1:] <= (1.0 + tolerance) * last[:-1] + 1e-12))
    judged = nu_hat[resolved]
    nu_error = abs(judged[-1] - 6.0)
    nu_ok = None
    if epsilon is not None:
        nu_ok = bool(nu_error <= max(epsilon**0.25, abs(judged[-1] - judged[-2])))
    return ConvergenceReport(
        s, nu_hat, increments, sup_dist, resolved, monotone, nu_error, nu_ok
    )


class CuspFit:
    def __init__(self, exponent, r2, left, right, far_max=None):
        self.exponent = exponent
        self.r2 = r2
        self.left = left
        self.right = right
        self.far_max = far_max

    @property
    def far_ok(self):
        if self.far_max is None:
            return None
        return self.far_max <= 2.0

    def __iter__(self):
        return iter((self.exponent, self.r2))

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "r2": self.r2,
            "left": self.left.slope,
            "right": self.right.slope,
            "far_max": self.far_max,
            "far_ok": self.far_ok,
        }

    def __repr__(self):
        return f"<CuspFit exponent={self.exponent:.4f} R2={self.r2:.6f}>"


def fit_cusp_exponent(x, ux, x_star, w_lo, w_hi):
    """
    Fit log|u_x| against log|x - x_star| on both sides of x_star within
    w_lo <= |x - x_star| <= w_hi and return the mean slope.

    >>> x = np.linspace(-0.2, 0.2, 400)
    >>> fit = fit_cusp_exponent(x, -np.abs(x) ** (-2 / 3), 0.0, 0.01, 0.1)
    >>> round(fit.exponent, 10), round(fit.r2, 10)
    (-0.6666666667, 1.0)
    """
    if not 0 < w_lo < w_hi:
        raise ParameterError("Fit window must satisfy 0 < w_lo < w_hi", (w_lo, w_hi))
    offset = np.asarray(x, dtype=np.float64) - x_star
    ux = np.asarray(ux, dtype=np.float64)
    inside = (np.abs(offset) >= w_lo) & (np.abs(offset) <= w_hi)
    sides = []
    for side in (offset < 0, offset > 0):
        keep = inside & side
        if np.count_nonzero(keep) < 3:
            raise ResolutionError(
                "Cusp fit window holds too few grid points at this resolution",
                int(np.count_nonzero(keep)),
            )
        sides.append(loglog_fit(offset[keep], ux[keep]))
    left, right = sides
    exponent = 0.5 * (left.slope + right.slope)
    return CuspFit(exponent, min(left.r2, right.r2), left, right)


def cusp_exponent(state, x_star, w_lo=None, w_hi=0.1):
    """
    Measure the exponent of |u_x| ~ |x - x_star|^p near the blowup point and
    check |u_x| <= 2 away from it.
    """
    u = state.u
    grid = u.grid
    ux = derivative(u, 1)
    if w_lo is None:
        m = -float(np.min(ux.samples))
        w_lo = 5.0 * m**-1.5
    offset = grid.wrap(grid.nodes - x_star)
    fit = fit_cusp_exponent(offset, ux.samples, 0.0, w_lo, w_hi)
    far = np.abs(offset) > FAR_DISTANCE
    fit.far_max = float(np.max(np.abs(ux.samples[far]), initial=0.0))
    log.debug("Cusp fit at x*=%g: %r", x_star, fit)
    return fit


def estimate_x_star(series, t_star):
    """
    Extrapolate xi linearly in t over the final decade of m to the blowup
    time.
    """
    mask = series.final_decade()
    if np.count_nonzero(mask) < 2:
        return float(series.xi[-1])
    return float(line_fit(series.t[mask], series.xi[mask])(t_star))


class SpeedField:
    """
    A transport speed V(X, s) with the largest |X| at which it is known.
    """

    def __init__(self, speed, limit, s_range):
        self.speed = speed
        self.limit = limit
        self.s_range = s_range

    def __call__(self, X, s):
        return self.speed(X, s)


def steady_speed():
    """
    The speed Ubar(X) + 3X/2 of the unmodulated self-similar Burgers flow.
    """
    return SpeedField(
        lambda X, s: bar_u(X) + 1.5 * X,
        lambda s: math.inf,
        (-math.inf, math.inf),
    )


def frame_speed(frames, track):
    """
    The transport speed V = (U + e^(s/2)(kappa - xi')) / (1 - tau') + 3X/2,
    interpolated linearly in s between frames. The predicted rates of the
    track are used where available, the measured ones otherwise.
    """
    if len(frames) != len(track):
        raise ParameterError(
            "Frames and track entries differ in number", (len(frames), len(track))
        )
    pieces = []
    for frame, entry in zip(frames, track):
        xi_dot = entry["xi_dot"]
        tau_dot = entry["tau_dot"]
        if math.isnan(xi_dot) or math.isnan(tau_dot):
            xi_dot, tau_dot = entry["dxi_dt"], entry["dtau_dt"]
        shift = math.exp(0.5 * frame.s) * (frame.kappa - xi_dot)
        pieces.append(
            (frame.s, CubicSpline(frame.X, frame.U), shift, 1.0 - tau_dot, frame.cap)
        )
    pieces.sort(key=lambda piece: piece[0])
    s_nodes = np.array([piece[0] for piece in pieces])

    def at_frame(piece, X):
        _, spline, shift, denominator, _ = piece
        return (spline(X) + shift) / denominator + 1.5 * X

    def bracket(s):
        k = int(np.clip(np.searchsorted(s_nodes, s) - 1, 0, len(pieces) - 2))
        return k, k + 1

    def speed(X, s):
        if len(pieces) == 1:
            return at_frame(pieces[0], X)
        lo, hi = bracket(s)
        weight = (s - s_nodes[lo]) / (s_nodes[hi] - s_nodes[lo])
        return (1.0 - weight) * at_frame(pieces[lo], X) + weight * at_frame(
            pieces[hi], X
        )

    def limit(s):
        if len(pieces) == 1:
            return pieces[0][4]
        lo, hi = bracket(s)
        return min(pieces[lo][4], pieces[hi][4])

    return SpeedField(speed, limit, (s_nodes[0], s_nodes[-1]))


class TrajectoryCheck:
    def __init__(self, X0, s, path, lower_margin, upper_margin, truncated):
        self.X0 = X0
        self.s = s
        self.path = path
        self.lower_margin = lower_margin
        self.upper_margin = upper_margin
        self.truncated = truncated

    @property
    def passed(self):
        lower_ok = self.lower_margin is None or self.lower_margin >= 0.0
        return lower_ok and self.upper_margin >= 0.0

    def to_dict(self):
        return {
            "X0": self.X0,
            "s_end": float(self.s[-1]),
            "X_end": float(self.path[-1]),
            "lower_margin": self.lower_margin,
            "upper_margin": self.upper_margin,
            "truncated": self.truncated,
            "passed": self.passed,
        }


class LagrangianReport:
    def __init__(self, checks):
        self.checks = checks

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def truncated(self):
        return [check.X0 for check in self.checks if check.truncated]

    def to_dict(self):
        return {
            "passed": self.passed,
            "seeds": [check.to_dict() for check in self.checks],
        }


def _trajectory(V, X0, s0, s1, ds):
    s = [s0]
    path = [X0]
    X = X0
    t = s0
    truncated = False
    while t < s1 - 1e-12:
        h = min(ds, s1 - t)
        k1 = V(X, t)
        k2 = V(X + 0.5 * h * k1, t + 0.5 * h)
        k3 = V(X + 0.5 * h * k2, t + 0.5 * h)
        k4 = V(X + h * k3, t + h)
        X_next = X + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if abs(X_next) > V.limit(t + h):
            truncated = True
            break
        X = float(X_next)
        t += h
        s.append(t)
        path.append(X)
    return np.array(s), np.array(path), truncated


def lagrangian_check(V, seeds, s0, s1, M, l=None, ds=0.01):
    """
    Integrate trajectories dPhi/ds = V(Phi, s), Phi(s0) = X0 with RK4 and
    check |X0| e^((s-s0)/5) <= |Phi| (for |X0| >= l and s > s0) and
    |Phi| <= (|X0| + 7/2 M e^(s0/2)) e^(3(s-s0)/2). A trajectory that leaves
    the range where V is known is cut there and flagged as truncated.
    """
    if l is None:
        l = math.log(M) ** -2
    checks = []
    for X0 in seeds:
        s, path, truncated = _trajectory(V, float(X0), s0, s1, ds)
        growth = s - s0
        size = np.abs(path)
        upper = (abs(X0) + 3.5 * M * math.exp(0.5 * s0)) * np.exp(1.5 * growth)
        upper_margin = float(np.min((upper - size) / upper))
        lower_margin = None
        later = growth > 0.0
        # Equality holds at s0.
        if abs(X0) >= l and np.any(later):
            lower = abs(X0) * np.exp(0.2 * growth[later])
            lower_margin = float(np.min((size[later] - lower) / lower))
        if truncated:
            log.info("Trajectory from X0=%g left the known range at s=%g", X0, s[-1])
        checks.append(TrajectoryCheck(X0, s, path, lower_margin, upper_margin, truncated))
    return LagrangianReport(checks)
