"""
Initial data for the blowup runs.

The default family is the rescaled profile with a smooth cutoff,

    u0(x) = eps^(1/2) Ubar_nu(x / eps^(3/2)) phi(x) + kappa0,

where phi equals one on [-cutoff_inner, cutoff_inner] and vanishes outside
[-cutoff_outer, cutoff_outer]. Its minimum slope is -1/eps at x = 0 and the
solution is started at t0 = -eps.
"""
import logging
import math

import numpy as np

from bhblow import ParameterError, ResolutionError
from bhblow.grid import Field, derivative, interp, locate_minimum, norms
from bhblow.profile import bar_u_derivs, rescaled

__all__ = [
    "DataSpec",
    "AuditCheck",
    "AuditReport",
    "audit_u0",
    "build_u0",
    "default_grid_size",
    "plateau_cutoff",
    "smooth_step",
]

FAMILIES = ("profile", "two-mode")
POINTS_PER_SCALE = 8
CUTOFF_SHARPNESS = 0.05
DATA_POINTS_PER_SCALE = 32
TWO_MODE_GRID_SIZE = 4096
PERTURBATION_MODES = 8

log = logging.getLogger(__name__)


class DataSpec:
    def __init__(
        self,
        epsilon,
        M=50.0,
        cutoff_inner=0.5,
        cutoff_outer=1.0,
        kappa0=0.0,
        nu=6.0,
        perturbation=0.0,
        seed=0,
        family="profile",
    ):
        self.epsilon = float(epsilon)
        self.M = float(M)
        self.cutoff_inner = float(cutoff_inner)
        self.cutoff_outer = float(cutoff_outer)
        self.kappa0 = float(kappa0)
        self.nu = float(nu)
        self.perturbation = float(perturbation)
        self.seed = int(seed)
        self.family = family
        self.validate()

    @property
    def t0(self):
        """
        Initial time, chosen so that the blowup happens near t = 0.
        """
        if self.family == "two-mode":
            return 0.0
        return -self.epsilon

    @property
    def length_scale(self):
        """
        The self-similar length eps^(3/2) of the data.
        """
        return self.epsilon**1.5

    def validate(self, grid=None):
        if self.family not in FAMILIES:
            raise ParameterError("Unknown data family", self.family)
        upper = 1.0 if self.family == "two-mode" else 0.1
        if not 0.0 < self.epsilon <= upper:
            raise ParameterError(f"Epsilon must be within (0, {upper}]", self.epsilon)
        if self.M < 20.0:
            raise ParameterError("M must be at least 20", self.M)
        if not self.nu > 0:
            raise ParameterError("Nu must be positive", self.nu)
        if self.family == "two-mode":
            return
        if not 0.0 < self.cutoff_inner < self.cutoff_outer:
            raise ParameterError(
                "Cutoff radii must satisfy 0 < inner < outer",
                (self.cutoff_inner, self.cutoff_outer),
            )
        if self.length_scale > self.cutoff_inner / 10.0:
            raise ParameterError(
                "Epsilon too large for the inner cutoff radius", self.epsilon
            )
        if not 0.0 <= self.perturbation <= self.epsilon**0.125:
            raise ParameterError(
                "Perturbation amplitude must be within [0, eps^(1/8)]",
                self.perturbation,
            )
        if grid is not None and self.cutoff_outer > grid.half_width / 4.0:
            raise ParameterError(
                "Outer cutoff must not exceed a quarter of the box half width",
                self.cutoff_outer,
            )

    def to_dict(self):
        return {
            "family": self.family,
            "epsilon": self.epsilon,
            "M": self.M,
            "cutoff_inner": self.cutoff_inner,
            "cutoff_outer": self.cutoff_outer,
            "kappa0": self.kappa0,
            "nu": self.nu,
            "perturbation": self.perturbation,
            "seed": self.seed,
        }

    def __repr__(self):
        return f"<DataSpec {self.family} eps={self.epsilon:g} M={self.M:g}>"


def smooth_step(t, sharpness=CUTOFF_SHARPNESS):
    """
    C-infinity step: zero for t <= 0, one for t >= 1,

        t / (t + (1 - t) exp(sharpness (1/t - 1/(1 - t)))).

    It follows the identity away from corners of width about 'sharpness'
    and its slope stays below 1 + 2 sharpness.

    >>> smooth_step(0.0), smooth_step(0.5), smooth_step(1.0)
    (0.0, 0.5, 1.0)
    """
    if not sharpness > 0.0:
        raise ParameterError("Step sharpness must be positive", sharpness)
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=np.float64)
    inside = (t > 0.0) & (t < 1.0)
    r = np.where(inside, t, 0.5)
    with np.errstate(over="ignore"):
        weight = np.exp(sharpness * (1.0 / r - 1.0 / (1.0 - r)))
        ramp = r / (r + (1.0 - r) * weight)
    result = np.where(inside, ramp, np.where(t >= 1.0, 1.0, 0.0))
    if scalar:
        return float(result)
    return result


def plateau_cutoff(x, inner, outer, sharpness=CUTOFF_SHARPNESS):
    """
    Even smooth cutoff, one on |x| <= inner and zero on |x| >= outer. The
    step runs in sqrt|x|, so x^(1/3) phi(x) falls at a nearly even rate
    across the annulus.
    """
    r = np.sqrt(np.abs(np.asarray(x, dtype=np.float64)))
    t = (r - math.sqrt(inner)) / (math.sqrt(outer) - math.sqrt(inner))
    return 1.0 - smooth_step(t, sharpness)


def _perturbation(spec, x):
    rng = np.random.default_rng(spec.seed)
    a, b = rng.standard_normal((2, PERTURBATION_MODES))
    k = np.pi * np.arange(1, PERTURBATION_MODES + 1) / spec.cutoff_outer
    bump = a @ np.cos(np.outer(k, x)) + b @ np.sin(np.outer(k, x))
    bump *= plateau_cutoff(x, spec.cutoff_inner, spec.cutoff_outer)
    peak = np.max(np.abs(bump))
    if peak == 0.0:
        return bump
    return spec.perturbation * bump / peak


def default_grid_size(spec, half_width, points=DATA_POINTS_PER_SCALE):
    """
    Smallest power of two n such that the spacing 2 half_width / n puts
    'points' nodes on the length eps^(3/2).

    >>> default_grid_size(DataSpec(0.1), 4.0)
    8192
    """
    if spec.family == "two-mode":
        return TWO_MODE_GRID_SIZE
    if points < POINTS_PER_SCALE:
        raise ParameterError(
            f"At least {POINTS_PER_SCALE} points per length scale are needed", points
        )
    needed = 2.0 * half_width * points / spec.length_scale
    return 2 ** math.ceil(math.log2(needed))


def build_u0(spec, grid):
    """
    Sample the initial data of 'spec' on 'grid'.
    """
    spec.validate(grid if spec.family == "profile" else None)
    x = grid.nodes
    if spec.family == "two-mode":
        if not math.isclose(grid.half_width, math.pi, rel_tol=1e-12):
            raise ParameterError(
                "The two-mode family needs a 2*pi periodic box", grid.half_width
            )
        samples = spec.epsilon * (
            2.0 * np.cos(x) + np.cos(2.0 * (x + 2.0 * math.pi**2))
        )
        return Field(grid, samples + spec.kappa0)

    scale = spec.length_scale
    if grid.dx > scale / POINTS_PER_SCALE:
        raise ResolutionError(
            f"Grid spacing {grid.dx:g} does not resolve eps^(3/2); largest usable"
            " spacing is",
            scale / POINTS_PER_SCALE,
        )
    phi = plateau_cutoff(x, spec.cutoff_inner, spec.cutoff_outer)
    samples = math.sqrt(spec.epsilon) * rescaled(spec.nu, x / scale) * phi
    if spec.perturbation > 0.0:
        samples = samples + _perturbation(spec, x)
    log.debug("Built %r on %r", spec, grid)
    return Field(grid, samples + spec.kappa0)


class AuditCheck:
    def __init__(self, name, measured, bound, margin=None):
        self.name = name
        self.measured = float(measured)
        self.bound = float(bound)
        if margin is None:
            margin = (self.bound - self.measured) / self.bound
        self.margin = float(margin)

    @property
    def passed(self):
        return self.margin >= 0.0

    def to_dict(self):
        return {
            "measured": self.measured,
            "bound": self.bound,
            "margin": self.margin,
            "passed": self.passed,
        }

    def __repr__(self):
        state = "ok" if self.passed else "FAILED"
        return f"<AuditCheck {self.name} {state} margin={self.margin:.3g}>"


class AuditReport:
    def __init__(self, checks):
        self.checks = {check.name: check for check in checks}

    def __getitem__(self, name):
        return self.checks[name]

    def __iter__(self):
        return iter(self.checks.values())

    @property
    def passed(self):
        return all(check.passed for check in self)

    @property
    def failures(self):
        return [check.name for check in self if not check.passed]

    def to_dict(self):
        return {name: check.to_dict() for name, check in self.checks.items()}


def _weighted_check(name, values, bound):
    if values.size == 0:
        return AuditCheck(name, 0.0, 1.0)
    return AuditCheck(name, np.max(np.abs(values) / bound), 1.0)


def _self_similar_checks(u0, spec, derivs):
    """
    Pointwise bounds on the rescaled data at s0 = -log(eps), where
    X = x eps^(-3/2) and d^j_X U = eps^(3j/2 - 1/2) d^j_x (u - kappa0).
    Each check reports the largest ratio of |value| to its bound.
    """
    eps = spec.epsilon
    M = spec.M
    X = u0.grid.nodes / spec.length_scale
    U = [(u0.samples - spec.kappa0) / math.sqrt(eps)]
    U.extend(eps ** (1.5 * j - 0.5) * d.samples for j, d in enumerate(derivs, 1))
    ev = bar_u_derivs(X, 4)
    weight = 1.0 + X * X
    absX = np.abs(X)

    middle = absX <= 0.5 * eps**-1.5
    wm = weight[middle]
    far = absX >= eps**-1.5
    near = absX <= math.log(M) ** -2
    return [
        _weighted_check(
            "middle_deviation", (U[0] - ev[0])[middle], eps**0.1 * wm ** (1 / 6)
        ),
        _weighted_check(
            "middle_deviation_slope",
            (U[1] - ev[1])[middle],
            eps ** (1 / 11) * wm ** (-1 / 3),
        ),
        _weighted_check("middle_curvature", U[2][middle], 2.0 * wm ** (-1 / 3)),
        _weighted_check("middle_third", U[3][middle], math.sqrt(M)),
        _weighted_check("far_slope", U[1][far], 0.75 * eps),
        _weighted_check("far_curvature", U[2][far], 2.0 * M**0.25 * eps),
        _weighted_check("near_fourth_deviation", (U[4] - ev[4])[near], eps**0.125),
        # Far slope bound of the bootstrap, |X| >= 1/2 e^(3 s0 / 2).
        _weighted_check("start_far_slope", U[1][~middle], 2.0 * eps),
    ]


def audit_u0(u0, spec):
    """
    Check the initial data against the conditions the blowup construction
    asks for. Violations are recorded in the report, never raised.
    """
    grid = u0.grid
    eps = spec.epsilon
    M = spec.M
    x = grid.nodes
    d1, d2, d3, d4, d5 = (derivative(u0, order) for order in range(1, 6))
    checks = []

    outside = np.abs(x) > spec.cutoff_outer
    leak = np.max(np.abs(u0.samples[outside] - spec.kappa0), initial=0.0)
    checks.append(AuditCheck("support", leak, 1e-12 * max(norms(u0)[1], 1.0)))
    checks.append(AuditCheck("amplitude", norms(u0)[1], 0.5 * M))

    slope = interp(d1, 0.0)
    checks.append(AuditCheck("slope_at_origin", abs(slope + 1.0 / eps), 1e-6 / eps))

    where = locate_minimum(d1, d2, d3)
    idx = int(np.argmin(d1.samples))
    minima = (d1.samples <= np.roll(d1.samples, 1)) & (
        d1.samples <= np.roll(d1.samples, -1)
    )
    minima[idx] = False
    runner_up = np.min(d1.samples[minima], initial=np.inf)
    margin = 1.0 - abs(where) / (0.5 * grid.dx)
    if runner_up <= d1.samples[idx]:
        margin = min(margin, -1.0)
    checks.append(AuditCheck("slope_extremum", abs(where), 0.5 * grid.dx, margin))

    checks.append(
        AuditCheck("curvature_at_origin", abs(interp(d2, 0.0)), 1e-6 * eps**-2.5)
    )
    checks.append(AuditCheck("curvature_sup", norms(d2)[1], 2.0 * eps**-2.5))
    checks.append(
        AuditCheck(
            "third_at_origin",
            abs(interp(d3, 0.0) - 6.0 * eps**-4),
            0.25 * eps**-3.75,
        )
    )
    checks.append(AuditCheck("third_sup", norms(d3)[1], 0.5 * M**0.75 * eps**-4))
    checks.append(AuditCheck("fifth_l2", norms(d5)[0], 0.5 * M**4 * eps**-6.25))
    # ||d_X U||_L2 = m^(-1/4) ||d_x u||_L2 with m = 1/eps.
    checks.append(AuditCheck("self_similar_slope_l2", eps**0.25 * norms(d1)[0], 4.0))
    checks.extend(_self_similar_checks(u0, spec, (d1, d2, d3, d4)))

    report = AuditReport(checks)
    for check in report:
        log.debug("%r", check)
    return report
