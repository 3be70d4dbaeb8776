import numpy as np

from bhblow import ParameterError

__all__ = ["LineFit", "line_fit", "loglog_fit", "parabolic_offset"]


class LineFit:
    def __init__(self, slope, intercept, r2, count):
        self.slope = slope
        self.intercept = intercept
        self.r2 = r2
        self.count = count

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x)

    @property
    def root(self):
        """
        The abscissa where the fitted line crosses zero.
        """
        if self.slope == 0.0:
            return float("nan")
        return -self.intercept / self.slope

    def __repr__(self):
        return f"<LineFit slope={self.slope:.6g} R2={self.r2:.6g} n={self.count}>"


def line_fit(x, y):
    """
    Ordinary least squares fit of y = intercept + slope * x.

    >>> fit = line_fit([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])
    >>> round(fit.slope, 12), round(fit.intercept, 12), round(fit.r2, 12)
    (2.0, 1.0, 1.0)
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise ParameterError("Abscissa and ordinate differ in length", (x.size, y.size))
    if x.size < 2:
        raise ParameterError("At least two points are needed for a line fit", x.size)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (intercept + slope * x)
    total = np.sum((y - y.mean()) ** 2)
    if total == 0.0:
        r2 = 1.0
    else:
        r2 = 1.0 - np.sum(residual**2) / total
    return LineFit(float(slope), float(intercept), float(r2), int(x.size))


def loglog_fit(x, y):
    """
    Fit log|y| against log|x|; the slope is the power law exponent.
    """
    x = np.abs(np.asarray(x, dtype=np.float64))
    y = np.abs(np.asarray(y, dtype=np.float64))
    keep = (x > 0) & (y > 0)
    return line_fit(np.log(x[keep]), np.log(y[keep]))


def parabolic_offset(left, center, right):
    """
    Return the offset (in units of the node spacing) of the vertex of the
    parabola through three equally spaced values.

    >>> parabolic_offset(1.0, 0.0, 1.0)
    0.0
    >>> parabolic_offset(3.0, 0.0, 1.0)
    0.25
    """
    curvature = left - 2.0 * center + right
    if curvature == 0.0:
        return 0.0
    return 0.5 * (left - right) / curvature
