"""
Periodic spectral grid and real sampled fields.

The box [-L, L) is sampled at x_j = -L + j*dx, j = 0..n-1, and fields are
represented by their real FFT coefficients (numpy.fft.rfft ordering, indices
0..n/2). The Nyquist coefficient is dropped by every derivative multiplier.
"""
import numpy as np

from bhblow import NumericError, ParameterError
from bhblow.util.fit import parabolic_offset

__all__ = [
    "SpectralGrid",
    "Field",
    "derivative",
    "dealias",
    "dealiased_product",
    "inner",
    "interp",
    "interp_many",
    "locate_minimum",
    "norms",
    "spectral_energy",
]

MAX_ORDER = 6
INTERP_CHUNK = 64
INTERP_BUDGET = 2**20


class SpectralGrid:
    """
    >>> grid = SpectralGrid(16, 1.0)
    >>> grid.dx
    0.125
    """

    def __init__(self, n, half_width):
        if int(n) != n or n < 16 or n % 2:
            raise ParameterError("Grid size must be an even integer >= 16", n)
        if not half_width > 0:
            raise ParameterError("Half width must be positive", half_width)
        self.n = int(n)
        self.half_width = float(half_width)
        self.dx = 2.0 * self.half_width / self.n
        self.wavenumbers = (np.pi / self.half_width) * np.arange(self.n // 2 + 1)
        self._nodes = None
        self._multipliers = {}
        self._band = None

    @property
    def nodes(self):
        if self._nodes is None:
            self._nodes = -self.half_width + self.dx * np.arange(self.n)
            self._nodes.flags.writeable = False
        return self._nodes

    @property
    def band(self):
        """
        Boolean mask of the rfft coefficients kept by the 2/3 rule.
        """
        if self._band is None:
            index = np.arange(self.n // 2 + 1)
            self._band = 3 * index < self.n
        return self._band

    def cached(self, key, build):
        """
        Return the spectral multiplier stored under 'key', calling build() to
        create it on first use.
        """
        if key not in self._multipliers:
            symbol = build()
            symbol.flags.writeable = False
            self._multipliers[key] = symbol
        return self._multipliers[key]

    def multiplier(self, order):
        """
        The symbol (ik)^order of the order-th derivative, Nyquist zeroed.
        """

        def build():
            symbol = (1j * self.wavenumbers) ** order
            symbol[-1] = 0.0
            return symbol

        return self.cached(("derivative", order), build)

    def wrap(self, x):
        """
        Map positions into the periodic box [-L, L).
        """
        period = 2.0 * self.half_width
        return np.mod(np.asarray(x, dtype=np.float64) + self.half_width, period) - (
            self.half_width
        )

    def __eq__(self, other):
        if not isinstance(other, SpectralGrid):
            return NotImplemented
        return self.n == other.n and self.half_width == other.half_width

    def __hash__(self):
        return hash((self.n, self.half_width))

    def __repr__(self):
        return f"<SpectralGrid n={self.n} L={self.half_width:g}>"


class Field:
    """
    A real function sampled on a SpectralGrid. Samples are read-only, the
    spectrum is computed on first use and cached.
    """

    def __init__(self, grid, samples, spectrum=None):
        samples = np.array(samples, dtype=np.float64)
        if samples.shape != (grid.n,):
            raise ParameterError(
                f"Expected {grid.n} samples on {grid!r}", samples.shape
            )
        samples.flags.writeable = False
        self.grid = grid
        self.samples = samples
        self._spectrum = spectrum

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(grid.nodes))

    @classmethod
    def from_spectrum(cls, grid, spectrum):
        samples = np.fft.irfft(spectrum, n=grid.n)
        return cls(grid, samples, spectrum)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n))

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = np.fft.rfft(self.samples)
            self._spectrum.flags.writeable = False
        return self._spectrum

    @property
    def is_finite(self):
        return bool(np.all(np.isfinite(self.samples)))

    def mean(self):
        return float(np.mean(self.samples))

    def _check_grid(self, other):
        if self.grid != other.grid:
            raise ParameterError("Fields live on different grids", (self.grid, other.grid))

    def __add__(self, other):
        if isinstance(other, Field):
            self._check_grid(other)
            return Field(self.grid, self.samples + other.samples)
        return Field(self.grid, self.samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check_grid(other)
            return Field(self.grid, self.samples - other.samples)
        return Field(self.grid, self.samples - other)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            raise TypeError("Use dealiased_product() to multiply two fields")
        return Field(self.grid, self.samples * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.samples)

    def __len__(self):
        return self.grid.n

    def __repr__(self):
        return f"<Field on {self.grid!r} mean={self.mean():.6g}>"


def _require_finite(f):
    if not f.is_finite:
        raise NumericError("Field contains non-finite samples")


def derivative(f, order=1):
    """
    Spectral derivative of the given order (1 to 6).
    """
    if int(order) != order or not 1 <= order <= MAX_ORDER:
        raise ParameterError(f"Derivative order must be within 1..{MAX_ORDER}", order)
    _require_finite(f)
    return Field.from_spectrum(f.grid, f.spectrum * f.grid.multiplier(int(order)))


def dealias(f):
    """
    Project a field onto the modes kept by the 2/3 rule.
    """
    return Field.from_spectrum(f.grid, np.where(f.grid.band, f.spectrum, 0.0))


def dealiased_product(f, g):
    """
    Pointwise product with the upper third of the spectrum zeroed afterwards.
    """
    f._check_grid(g)
    return dealias(Field(f.grid, f.samples * g.samples))


def inner(f, g):
    """
    Discrete L2 inner product dx * sum(f * g).
    """
    f._check_grid(g)
    return float(f.grid.dx * np.dot(f.samples, g.samples))


def norms(f):
    """
    Return the discrete L2 norm sqrt(dx * sum(f**2)) and the sup norm.
    """
    l2 = float(np.sqrt(f.grid.dx * np.dot(f.samples, f.samples)))
    linf = float(np.max(np.abs(f.samples)))
    return l2, linf


def spectral_energy(f):
    """
    The squared L2 norm computed from the rfft coefficients (Parseval).
    """
    power = np.abs(f.spectrum) ** 2
    total = power[0] + 2.0 * np.sum(power[1:-1]) + power[-1]
    return float(f.grid.dx * total / f.grid.n)


def locate_minimum(f, df=None, d2f=None):
    """
    Position of the minimum of a field: grid argmin, refined by a parabola
    through the neighbouring nodes and, if the first two derivatives of the
    field are given, polished by one Newton step on the interpolant of df.
    """
    grid = f.grid
    samples = f.samples
    idx = int(np.argmin(samples))
    left = samples[idx - 1]
    right = samples[(idx + 1) % grid.n]
    x = grid.nodes[idx] + grid.dx * parabolic_offset(left, samples[idx], right)
    if df is not None and d2f is not None:
        curvature = interp(d2f, x)
        if curvature > 0:
            step = interp(df, x) / curvature
            if abs(step) <= grid.dx:
                x -= step
    return float(grid.wrap(x))


def interp_many(fields, x):
    """
    Evaluate the trigonometric interpolants of several fields on the same
    grid at the positions x. Returns one array per field, shaped like x.
    """
    grid = fields[0].grid
    for f in fields[1:]:
        fields[0]._check_grid(f)
    positions = np.asarray(x, dtype=np.float64)
    offsets = grid.wrap(positions).ravel() + grid.half_width
    coeffs = np.array([f.spectrum for f in fields])
    k = grid.wavenumbers
    half = grid.n // 2
    result = np.empty((len(fields), offsets.size), dtype=np.float64)
    # Bound the size of the phase matrix on large grids.
    size = max(1, min(INTERP_CHUNK, INTERP_BUDGET // half))
    for start in range(0, offsets.size, size):
        chunk = offsets[start : start + size]
        phase = np.exp(1j * np.outer(chunk, k[1:half]))
        interior = 2.0 * np.real(phase @ coeffs[:, 1:half].T)
        nyquist = np.outer(np.cos(k[half] * chunk), coeffs[:, half].real)
        values = (coeffs[:, 0].real + interior + nyquist) / grid.n
        result[:, start : start + size] = values.T
    return [row.reshape(positions.shape) for row in result]


def interp(f, x):
    """
    Evaluate the trigonometric interpolant of a field at arbitrary positions.
    Accepts a scalar or an array of positions and returns the same shape.
    """
    value = interp_many([f], x)[0]
    if value.ndim == 0:
        return float(value)
    return value
