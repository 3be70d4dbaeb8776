"""
The Hilbert transform H[f](x) = (1/pi) p.v. int f(y) / (x - y) dy.

hilbert_multiplier() is the periodic transform used by the solver, that is
the Fourier multiplier -i*sgn(k). hilbert_pv() evaluates the principal value
integral on the real line by adaptive quadrature and serves as an oracle for
the periodic version on compactly supported data.
"""
import logging
import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline

from bhblow import AccuracyError, ParameterError
from bhblow.grid import Field

__all__ = ["PVQuadratureSpec", "PVResult", "hilbert_multiplier", "hilbert_pv"]

PANEL_RATIO = 2.0
GK_NODES = 21

log = logging.getLogger(__name__)


def hilbert_symbol(grid):
    """
    Return the rfft multiplier -i*sgn(k) with the zero and Nyquist modes set
    to zero.
    """

    def build():
        symbol = np.full(grid.n // 2 + 1, -1j)
        symbol[0] = 0.0
        symbol[-1] = 0.0
        return symbol

    return grid.cached("hilbert", build)


def hilbert_multiplier(f):
    return Field.from_spectrum(f.grid, f.spectrum * hilbert_symbol(f.grid))


class PVQuadratureSpec:
    def __init__(self, inner_exclusion=1e-3, outer_cutoff=50.0, node_count=4096):
        if not inner_exclusion > 0:
            raise ParameterError("Inner exclusion must be positive", inner_exclusion)
        if not outer_cutoff > inner_exclusion:
            raise ParameterError(
                "Outer cutoff must exceed the inner exclusion", outer_cutoff
            )
        if int(node_count) != node_count or node_count < 64:
            raise ParameterError("Need at least 64 quadrature nodes", node_count)
        self.inner_exclusion = float(inner_exclusion)
        self.outer_cutoff = float(outer_cutoff)
        self.node_count = int(node_count)

    @property
    def panels(self):
        """
        Panel boundaries in the distance t = |x - y|: the inner region
        (0, delta] followed by geometrically growing panels up to R.
        """
        edges = [0.0, self.inner_exclusion]
        while edges[-1] * PANEL_RATIO < self.outer_cutoff:
            edges.append(edges[-1] * PANEL_RATIO)
        edges.append(self.outer_cutoff)
        return edges

    def __repr__(self):
        return "<PVQuadratureSpec delta={0:g} R={1:g} nodes={2}>".format(
            self.inner_exclusion, self.outer_cutoff, self.node_count
        )


class PVResult:
    def __init__(self, value, error, tail_bound):
        self.value = value
        self.error = error
        self.tail_bound = tail_bound

    def __float__(self):
        return self.value

    def __repr__(self):
        return "<PVResult {0:.12g} +/- {1:.2g} (tail <= {2:.2g})>".format(
            self.value, self.error, self.tail_bound
        )


def _as_function(samples_on_line):
    if callable(samples_on_line):
        return samples_on_line
    nodes, values = samples_on_line
    spline = CubicSpline(np.asarray(nodes), np.asarray(values), extrapolate=False)

    def tabulated(y):
        return np.nan_to_num(spline(y), nan=0.0)

    return tabulated


def _integrate(integrand, lo, hi, limit):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            return quad(integrand, lo, hi, limit=limit, epsabs=1e-12, epsrel=1e-10)
        except IntegrationWarning as exc:
            raise AccuracyError(
                f"Adaptive quadrature on [{lo:g}, {hi:g}] did not converge: {exc}"
            ) from exc


def hilbert_pv(samples_on_line, x, spec=None):
    """
    Evaluate H[f](x) for a function on the real line given either as a
    callable or as a table (nodes, values) that is zero outside its range.

    The odd part of the kernel is folded, so the integrand on each panel is
    (f(x - t) - f(x + t)) / t, which stays bounded as t goes to zero. The
    contribution of |x - y| > R is not computed; instead an L2 bound of it is
    returned as 'tail_bound'.
    """
    if spec is None:
        spec = PVQuadratureSpec()
    func = _as_function(samples_on_line)
    x = float(x)
    limit = max(50, spec.node_count // GK_NODES)

    def integrand(t):
        return float(func(x - t) - func(x + t)) / t

    total = 0.0
    error = 0.0
    edges = spec.panels
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, abserr = _integrate(integrand, lo, hi, limit)
        total += value
        error += abserr

    def square(y):
        return float(func(y)) ** 2

    left, _ = _integrate(square, -np.inf, x - spec.outer_cutoff, limit)
    right, _ = _integrate(square, x + spec.outer_cutoff, np.inf, limit)
    tail = math.sqrt(max(left + right, 0.0)) * math.sqrt(2.0 / spec.outer_cutoff)

    result = PVResult(total / math.pi, error / math.pi, tail / math.pi)
    log.debug("Principal value at x=%g: %r", x, result)
    return result
