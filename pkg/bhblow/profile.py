"""
The stable self-similar Burgers profile.

Ubar is the odd solution of the steady self-similar Burgers equation
-U/2 + (3X/2 + U) U' = 0 with Ubar'(0) = -1, Ubar'''(0) = 6. It is the real
root of the cubic U^3 + U + X = 0, which is what gets evaluated here instead
of the Cardano expression.
"""
import logging
from math import comb

import numpy as np

from bhblow import ParameterError, VerificationFailure

__all__ = [
    "ProfileEval",
    "ProfileBoundsReport",
    "bar_u",
    "bar_u_cardano",
    "bar_u_derivs",
    "check_profile_bounds",
    "profile_table",
    "rescaled",
    "rescaled_derivative",
]

MAX_ORDER = 5
NEWTON_ITERATIONS = 100
ROUNDING = 1e-13

# |X| <= 1/5: bounds on |Ubar|, |Ubar'|, ..., |Ubar^(5)|.
NEAR_RADIUS = 0.2
NEAR_BOUNDS = (0.2, 1.0, 1.0, 6.0, 30.0, 360.0)
FAR_RADIUS = 100.0

log = logging.getLogger(__name__)


def bar_u(X):
    """
    Evaluate the profile by Newton's method on U^3 + U + X = 0.

    >>> bar_u(0.0) == 0.0
    True
    >>> round(bar_u(2.0), 12), round(bar_u(-2.0), 12)
    (-1.0, 1.0)
    """
    scalar = np.ndim(X) == 0
    X = np.asarray(X, dtype=np.float64)
    # The seed lies between the root and -sgn(X)*inf, where the cubic is
    # concave in the direction of the root, so the iteration is monotone.
    U = -np.sign(X) * np.minimum(np.abs(X), np.cbrt(np.abs(X)))
    for _ in range(NEWTON_ITERATIONS):
        update = (U * U * U + U + X) / (3.0 * U * U + 1.0)
        U = U - update
        if np.all(np.abs(update) <= 4.0 * np.finfo(float).eps * np.abs(U)):
            break
    if scalar:
        return float(U)
    return U


def bar_u_cardano(X):
    """
    The closed Cardano form of the profile. Loses accuracy to cancellation
    for large |X|; only used to cross-check bar_u().
    """
    X = np.asarray(X, dtype=np.float64)
    root = np.sqrt(1.0 / 27.0 + X * X / 4.0)
    return np.cbrt(-X / 2.0 + root) + np.cbrt(-X / 2.0 - root)


class ProfileEval:
    """
    The profile and its derivatives at the points X. Index 0 is the value,
    index j the j-th derivative.
    """

    def __init__(self, X, value, derivs):
        self.X = X
        self.value = value
        self.derivs = tuple(derivs)

    def __getitem__(self, order):
        if order == 0:
            return self.value
        return self.derivs[order - 1]

    def __len__(self):
        return len(self.derivs) + 1

    @property
    def cubic_residual(self):
        U = self.value
        return U * U * U + U + self.X

    @property
    def ode_residual(self):
        return -0.5 * self.value + (1.5 * self.X + self.value) * self.derivs[0]

    def __repr__(self):
        return f"<ProfileEval up to order {len(self.derivs)}>"


def bar_u_derivs(X, up_to=MAX_ORDER):
    """
    Derivatives by implicit differentiation of (1 + 3U^2) U' = -1.

    >>> ev = bar_u_derivs(0.0, 3)
    >>> float(ev[1]), float(ev[3])
    (-1.0, 6.0)
    """
    if int(up_to) != up_to or not 1 <= up_to <= MAX_ORDER:
        raise ParameterError(f"Derivative order must be within 1..{MAX_ORDER}", up_to)
    X = np.asarray(X, dtype=np.float64)
    U = [bar_u(X)]
    q = [U[0] * U[0]]
    denominator = 1.0 + 3.0 * q[0]
    U.append(-1.0 / denominator)
    for n in range(1, up_to):
        # q^(n) only needs U up to order n.
        q.append(sum(comb(n, j) * U[j] * U[n - j] for j in range(n + 1)))
        total = sum(comb(n, k) * 3.0 * q[k] * U[n + 1 - k] for k in range(1, n + 1))
        U.append(-total / denominator)
    return ProfileEval(X, U[0], U[1:])


def _check_nu(nu):
    if not nu > 0:
        raise ParameterError("Rescaling parameter nu must be positive", nu)


def rescaled(nu, X):
    """
    The profile rescaled to third derivative nu at the origin,
    Ubar_nu(X) = (nu/6)^(-1/2) Ubar((nu/6)^(1/2) X).
    """
    _check_nu(nu)
    a = np.sqrt(nu / 6.0)
    return bar_u(a * np.asarray(X, dtype=np.float64)) / a


def rescaled_derivative(nu, X, order):
    _check_nu(nu)
    if order == 0:
        return rescaled(nu, X)
    a = np.sqrt(nu / 6.0)
    ev = bar_u_derivs(a * np.asarray(X, dtype=np.float64), order)
    return a ** (order - 1) * ev[order]


def default_samples(xmax=1e4, samples=20000):
    """
    Sampling plan for check_profile_bounds(): log-spaced |X| up to xmax on
    both sides, a fine uniform grid on [-1/5, 1/5] and the origin.
    """
    half = max(samples // 2, 2)
    spread = np.logspace(-6.0, np.log10(xmax), half)
    fine = np.linspace(-NEAR_RADIUS, NEAR_RADIUS, 4001)
    return np.unique(np.concatenate([-spread, spread, fine, [0.0]]))


class ProfileBoundsReport:
    def __init__(self):
        self.margins = {}

    def record(self, name, bound, measured, X, lower=False):
        """
        Store the worst normalized margin of 'measured <= bound' (or
        'measured >= bound' if 'lower' is set) over the points X.
        """
        if X.size == 0:
            return
        if lower:
            margin = (measured - bound) / bound
        else:
            margin = (bound - measured) / bound
        worst = int(np.argmin(margin))
        current = self.margins.get(name)
        if current is None or margin[worst] < current[0]:
            self.margins[name] = (float(margin[worst]), float(X[worst]))

    @property
    def worst(self):
        name = min(self.margins, key=lambda key: self.margins[key][0])
        return name, self.margins[name]

    @property
    def passed(self):
        return all(margin >= -ROUNDING for margin, _ in self.margins.values())

    def to_dict(self):
        return {
            name: {"margin": margin, "X": X}
            for name, (margin, X) in sorted(self.margins.items())
        }

    def __repr__(self):
        name, (margin, X) = self.worst
        return f"<ProfileBoundsReport worst {name}={margin:.3g} at X={X:g}>"


def check_profile_bounds(X=None):
    """
    Check every pointwise bound on the profile at the points X and return a
    report of worst margins. Raises VerificationFailure on the first violated
    bound.
    """
    if X is None:
        X = default_samples()
    X = np.asarray(X, dtype=np.float64)
    ev = bar_u_derivs(X, MAX_ORDER)
    absX = np.abs(X)
    weight = 1.0 + X * X
    report = ProfileBoundsReport()

    report.record("global.value", weight ** (1 / 6), np.abs(ev[0]), X)
    report.record("global.slope", weight ** (-1 / 3), np.abs(ev[1]), X)
    report.record("global.curvature", weight ** (-5 / 6), np.abs(ev[2]), X)

    far = absX >= FAR_RADIUS
    far_decay = weight[far] ** (-1 / 3)
    far_slope = np.abs(ev[1][far])
    report.record("far.slope_lower", 0.25 * far_decay, far_slope, X[far], lower=True)
    report.record("far.slope_upper", 0.35 * far_decay, far_slope, X[far])

    near = absX <= NEAR_RADIUS
    for order, bound in enumerate(NEAR_BOUNDS):
        report.record(
            f"near.order_{order}",
            np.full(np.count_nonzero(near), bound),
            np.abs(ev[order][near]),
            X[near],
        )

    for l in np.linspace(0.01, 0.19, 19):
        middle = absX >= l
        report.record(
            "middle.slope",
            (1.0 - 2.0 * l * l) * weight[middle] ** (-1 / 3),
            np.abs(ev[1][middle]),
            X[middle],
        )

    for name, (margin, where) in sorted(report.margins.items()):
        log.debug("Profile bound %s: worst margin %.3g at X=%g", name, margin, where)
        if margin < -ROUNDING:
            raise VerificationFailure("Profile bound does not hold", name, where)
    return report


def profile_table(X):
    """
    Return rows (X, Ubar, Ubar', ..., Ubar^(5)) for the points X.
    """
    ev = bar_u_derivs(X, MAX_ORDER)
    columns = [np.atleast_1d(ev.X)] + [np.atleast_1d(ev[j]) for j in range(MAX_ORDER + 1)]
    return np.column_stack(columns).tolist()
