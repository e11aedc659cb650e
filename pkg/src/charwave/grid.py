"""Grids, field slices, finite-difference operators and quadrature.

Array layout is fixed for every geometry: a slice of constant marching
coordinate (``t`` or ``u``) is stored as ``samples[radial, a, b]`` where

* ``cartesian_cauchy``: axes ``(z, x, y)``, all periodic;
* ``nullplane``: axes ``(z, x, y)``, ``z`` bounded on ``[0, T]``;
* ``nullcone``: axes ``(r, s, phi)``, ``r`` bounded on ``[r0, r0 + T]``,
  ``s`` cell-centred on ``(-1, 1)`` and ``phi`` periodic on ``[0, 2 pi)``.

Surfaces of constant radial coordinate (``z = 0`` or ``r = r0``) are stored
as ``samples[march, a, b]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GEOMETRIES = ("cartesian_cauchy", "nullplane", "nullcone")
SUPPORTED_ORDERS = (2, 4)

_AXES = {
    "cartesian_cauchy": ("z", "x", "y"),
    "nullplane": ("z", "x", "y"),
    "nullcone": ("r", "s", "phi"),
}
_PERIODIC = {
    "cartesian_cauchy": {"z", "x", "y"},
    "nullplane": {"x", "y"},
    "nullcone": {"phi"},
}

# centred first-derivative weights, offsets -p/2 .. p/2
_CENTRED = {
    2: np.array([-0.5, 0.0, 0.5]),
    4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
}
# one-sided closures for the first p/2 rows (mirrored with a sign flip at the end)
_CLOSURE = {
    2: np.array([[-3.0, 4.0, -1.0]]) / 2.0,
    4: np.array([[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]]) / 12.0,
}


class GridError(ValueError):
    """Invalid grid parameters or an operator applied to the wrong axis."""


class NonFiniteError(FloatingPointError):
    """A field picked up NaN or Inf values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class GridSpec:
    """Discretisation of one of the three problem geometries.

    ``resolutions`` is ``(n_march, n_radial, n_a, n_b)``: number of marching
    steps, radial intervals (``z``/``r``; points for a periodic ``z``), and
    points along the two transverse axes.  For the characteristic geometries
    ``n_march`` must be a multiple of ``n_radial`` so that the top surface
    ``u + z = T`` passes through grid points every ``n_march // n_radial``
    steps.
    """

    geometry: str
    T: float
    resolutions: tuple[int, int, int, int]
    scheme_order: int = 2
    cfl_factor: float = 0.25
    periodic_lengths: tuple[float, float] = (2 * math.pi, 2 * math.pi)
    z_extent: float | None = None
    r0: float = 1.0

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise GridError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        if self.scheme_order not in SUPPORTED_ORDERS:
            raise GridError(f"scheme_order must be one of {{2, 4}}, got {self.scheme_order}")
        if not self.cfl_factor > 0:
            raise GridError(f"cfl_factor must be positive, got {self.cfl_factor}")
        if not self.T > 0:
            raise GridError(f"T must be positive, got {self.T}")
        res = tuple(int(n) for n in self.resolutions)
        if len(res) != 4:
            raise GridError("resolutions must have four entries")
        object.__setattr__(self, "resolutions", res)
        if min(res) < 4:
            raise GridError(f"all resolutions must be >= 4, got {res}")
        if self.geometry == "nullcone" and not self.r0 > 0:
            raise GridError(f"r0 must be positive for the null cone, got {self.r0}")
        if self.geometry == "cartesian_cauchy":
            if self.z_extent is None:
                object.__setattr__(self, "z_extent", float(self.periodic_lengths[0]))
            if not self.z_extent > 0:
                raise GridError("z_extent must be positive")
        elif self.geometry == "nullplane":
            if self.z_extent is not None and not math.isclose(self.z_extent, self.T):
                raise GridError("the null-plane strip spans z in [0, T]; z_extent must equal T")
            object.__setattr__(self, "z_extent", float(self.T))
        if self.geometry != "nullcone" and min(self.periodic_lengths) <= 0:
            raise GridError("periodic lengths must be positive")
        if self.geometry != "cartesian_cauchy" and res[0] % res[1]:
            raise GridError(
                f"n_march ({res[0]}) must be a multiple of n_radial ({res[1]}) "
                "so that u + z = T lands on grid points"
            )
        if self.march_step > self.cfl_factor * self.min_spacing * (1 + 1e-12):
            raise GridError(
                f"marching step {self.march_step:.6g} exceeds cfl_factor * min spacing "
                f"= {self.cfl_factor * self.min_spacing:.6g}"
            )

    # -- construction helpers ------------------------------------------------

    @classmethod
    def nullplane(cls, N=16, T=1.0, order=2, cfl=0.25, n_x=None, n_y=None, n_u=None,
                  lengths=(2 * math.pi, 2 * math.pi)):
        n_x = N if n_x is None else n_x
        n_y = N if n_y is None else n_y
        n_u = _default_march(N, cfl) if n_u is None else n_u
        return cls("nullplane", T, (n_u, N, n_x, n_y), order, cfl, tuple(lengths))

    @classmethod
    def nullcone(cls, N=16, T=1.0, order=2, cfl=0.25, r0=1.0, n_s=None, n_phi=None, n_u=None):
        n_s = N if n_s is None else n_s
        n_phi = N if n_phi is None else n_phi
        n_u = _default_march(N, cfl) if n_u is None else n_u
        return cls("nullcone", T, (n_u, N, n_s, n_phi), order, cfl, r0=r0)

    @classmethod
    def cauchy(cls, N=16, T=1.0, order=4, cfl=0.25, lengths=(1.0, 1.0, 1.0), n_t=None):
        lz, lx, ly = lengths
        h = min(lz, lx, ly) / N
        if n_t is None:
            if not cfl > 0:
                raise GridError(f"cfl_factor must be positive, got {cfl}")
            n_t = max(4, math.ceil(T / (cfl * h) - 1e-9))
        return cls("cartesian_cauchy", T, (n_t, N, N, N), order, cfl, (lx, ly), z_extent=lz)

    # -- derived quantities --------------------------------------------------

    @property
    def axes(self):
        return _AXES[self.geometry]

    @property
    def periodic_axes(self):
        return _PERIODIC[self.geometry]

    @property
    def n_march(self):
        return self.resolutions[0]

    @property
    def n_radial(self):
        return self.resolutions[1]

    @property
    def march_step(self):
        return self.T / self.n_march

    @property
    def steps_per_station(self):
        return self.n_march // self.n_radial

    @property
    def spacing(self):
        """Grid spacing along the three slice axes."""
        _, nr, na, nb = self.resolutions
        if self.geometry == "cartesian_cauchy":
            return (self.z_extent / nr, self.periodic_lengths[0] / na, self.periodic_lengths[1] / nb)
        if self.geometry == "nullplane":
            return (self.T / nr, self.periodic_lengths[0] / na, self.periodic_lengths[1] / nb)
        return (self.T / nr, 2.0 / na, 2 * math.pi / nb)

    @property
    def min_spacing(self):
        h = self.spacing
        if self.geometry == "cartesian_cauchy":
            return min(h)
        return h[0]

    @property
    def max_spacing(self):
        return max(max(self.spacing), self.march_step)

    @property
    def slice_shape(self):
        _, nr, na, nb = self.resolutions
        if self.geometry == "cartesian_cauchy":
            return (nr, na, nb)
        return (nr + 1, na, nb)

    @property
    def surface_shape(self):
        """Shape of samples on ``z = 0`` / ``r = r0`` at full marching steps."""
        _, _, na, nb = self.resolutions
        return (self.n_march + 1, na, nb)

    @property
    def stage_shape(self):
        """Shape of transverse-surface data sampled at half marching steps."""
        _, _, na, nb = self.resolutions
        return (2 * self.n_march + 1, na, nb)

    def coords(self, axis):
        """1-D coordinate array along a named slice axis."""
        i = self.axes.index(axis)
        n = self.slice_shape[i]
        h = self.spacing[i]
        if axis == "r":
            return self.r0 + h * np.arange(n)
        if axis == "s":
            return -1.0 + h * (np.arange(n) + 0.5)
        return h * np.arange(n)

    def mesh(self):
        """Broadcastable coordinate arrays for the slice axes."""
        c = [self.coords(a) for a in self.axes]
        return c[0][:, None, None], c[1][None, :, None], c[2][None, None, :]

    def march_coords(self, half=False):
        n = 2 * self.n_march if half else self.n_march
        return np.linspace(0.0, self.T, n + 1)

    def prism_rows(self, step):
        """Number of leading radial indices of slice ``step`` that lie inside the
        region bounded by the top surface (``z <= T - u``); points beyond it
        depend on the outer closure and are not part of the problem."""
        u = step * self.march_step
        return int(math.floor((self.T - u) / self.spacing[0] + 1e-9)) + 1

    def diagonal_coords(self):
        """Radial coordinate of each station on the top surface (index = radial index)."""
        return self.coords(self.axes[0])


def _default_march(n_radial, cfl):
    if not cfl > 0:
        raise GridError(f"cfl_factor must be positive, got {cfl}")
    return math.ceil(1.0 / cfl - 1e-12) * n_radial


@dataclass
class FieldSlice:
    """Samples of one scalar field on a slice of constant ``t``/``u``."""

    grid: GridSpec
    axis_value: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape != self.grid.slice_shape:
            raise GridError(
                f"sample shape {self.samples.shape} does not match grid {self.grid.slice_shape}"
            )
        check_finite(self.samples, "FieldSlice")

    def like(self, samples):
        return FieldSlice(self.grid, self.axis_value, samples)


@dataclass
class DiagonalRecord:
    """Values captured on the top surface ``u + z = T`` while marching.

    ``values[name][j]`` is the transverse plane at radial index ``j``; it is
    filled when the march reaches ``u = T - z_j``.
    """

    grid: GridSpec
    names: tuple[str, ...]
    values: dict = field(default_factory=dict)
    filled: np.ndarray = None

    def __post_init__(self):
        shape = self.grid.slice_shape
        for name in self.names:
            self.values.setdefault(name, np.zeros(shape))
        if self.filled is None:
            self.filled = np.zeros(shape[0], dtype=bool)

    def store(self, j, planes):
        for name in self.names:
            self.values[name][j] = planes[name]
        self.filled[j] = True

    @property
    def complete(self):
        return bool(self.filled.all())

    def stack(self, names=None):
        names = self.names if names is None else names
        return np.stack([self.values[n] for n in names])


def check_finite(a, what="field", step=None):
    if not np.all(np.isfinite(a)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(np.asarray(a)))[0])
        where = f" at step {step}" if step is not None else ""
        raise NonFiniteError(f"non-finite value in {what}{where} (first index {bad})", step)


# -- array-level operators ----------------------------------------------------


def _along(axis, ndim, sl):
    idx = [slice(None)] * ndim
    idx[axis] = sl
    return tuple(idx)


def _shift_sum(src, weights, start, n, out, axis):
    """``out += sum_k weights[k] * src[start + k : start + k + n]`` along ``axis``."""
    tmp = np.empty_like(out)
    for k, w in enumerate(weights):
        if w:
            np.multiply(src[_along(axis, src.ndim, slice(start + k, start + k + n))], w, out=tmp)
            out += tmp
    return out


def diff_periodic(a, h, axis, order=2):
    """Centred derivative of order ``order`` with periodic wraparound."""
    if order not in _CENTRED:
        raise GridError(f"order must be one of {SUPPORTED_ORDERS}")
    a = np.asarray(a, dtype=float)
    axis = axis % a.ndim
    n = a.shape[axis]
    if n < order + 1:
        raise GridError(f"need at least {order + 1} points along the periodic axis")
    q = order // 2
    nd = a.ndim
    padded = np.concatenate([a[_along(axis, nd, slice(n - q, n))], a,
                             a[_along(axis, nd, slice(0, q))]], axis=axis)
    out = np.zeros(a.shape)
    return _shift_sum(padded, _CENTRED[order] / h, 0, n, out, axis)


def diff_bounded(a, h, axis, order=2):
    """Centred interior derivative with one-sided closures of the same order."""
    if order not in _CENTRED:
        raise GridError(f"order must be one of {SUPPORTED_ORDERS}")
    a = np.asarray(a, dtype=float)
    axis = axis % a.ndim
    n = a.shape[axis]
    if n < order + 1:
        raise GridError(f"need at least {order + 1} points along a bounded axis, got {n}")
    q = order // 2
    nd = a.ndim
    out = np.zeros(a.shape)
    _shift_sum(a, _CENTRED[order] / h, 0, n - 2 * q, out[_along(axis, nd, slice(q, n - q))], axis)
    closure = _CLOSURE[order] / h
    width = closure.shape[1]
    for i, row in enumerate(closure):
        lo = np.zeros_like(out[_along(axis, nd, i)])
        hi = np.zeros_like(lo)
        for k, w in enumerate(row):
            lo += w * a[_along(axis, nd, k)]
            hi -= w * a[_along(axis, nd, n - 1 - k)]
        out[_along(axis, nd, i)] = lo
        out[_along(axis, nd, n - 1 - i)] = hi
    return out


def cumulative_integral(f, h, axis=0, order=2):
    """Running integral from the first sample, exact for polynomials of degree < order.

    Second order is the cumulative trapezoid rule; fourth order integrates the
    cubic through the four nearest samples over each cell.
    """
    f = np.moveaxis(np.asarray(f, dtype=float), axis, 0)
    n = f.shape[0]
    if order == 2:
        cells = 0.5 * h * (f[1:] + f[:-1])
    elif order == 4:
        if n < 4:
            raise GridError("fourth-order integration needs at least 4 points")
        cells = np.empty((n - 1,) + f.shape[1:])
        cells[1:-1] = h / 24.0 * (-f[:-3] + 13 * f[1:-2] + 13 * f[2:-1] - f[3:])
        cells[0] = h / 24.0 * (9 * f[0] + 19 * f[1] - 5 * f[2] + f[3])
        cells[-1] = h / 24.0 * (9 * f[-1] + 19 * f[-2] - 5 * f[-3] + f[-4])
    else:
        raise GridError(f"order must be one of {SUPPORTED_ORDERS}")
    out = np.zeros(f.shape)
    if f.ndim == 1:
        np.cumsum(cells, out=out[1:])
    else:
        # running sum plane by plane; faster than cumsum along a leading axis
        for i in range(n - 1):
            np.add(out[i], cells[i], out=out[i + 1])
    return np.moveaxis(out, 0, axis)


def bounded_weights(n, h, order=2):
    """Closed-interval quadrature weights for ``n`` uniform samples.

    Order 2 is the trapezoid rule.  Order 4 is composite Simpson, with the
    three-eighths rule on the last three intervals when their count is odd.
    """
    if order == 2:
        w = np.full(n, float(h))
        w[[0, -1]] *= 0.5
        return w
    if order != 4:
        raise GridError(f"order must be one of {SUPPORTED_ORDERS}")
    m = n - 1
    if m < 2:
        raise GridError("fourth-order quadrature needs at least 3 points")
    w = np.zeros(n)
    even = m if m % 2 == 0 else m - 3
    if even:
        w[:even + 1:2] += 2.0
        w[1:even:2] += 4.0
        w[[0, even]] -= 1.0
        w[:even + 1] *= h / 3.0
    if even != m:
        w[even:] += 3.0 * h / 8.0 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def march_ode(source, boundary, h, axis=0, order=2, radius=None, decay=0):
    """Integrate ``dF/dx = source - decay * F / x`` outward from ``boundary``.

    With ``decay == 0`` this is a plain running quadrature.  With ``decay = k``
    the coordinate ``x`` is ``radius`` (1-D array along ``axis``) and the
    integrating factor ``x**k`` turns the ODE into a quadrature::

        F(x) = (x0**k F(x0) + int_x0^x x'**k source dx') / x**k
    """
    source = np.asarray(source, dtype=float)
    boundary = np.asarray(boundary, dtype=float)
    moved = np.moveaxis(source, axis, 0)
    if moved.shape[1:] != boundary.shape:
        raise GridError(
            f"boundary shape {boundary.shape} does not match source planes {moved.shape[1:]}"
        )
    if decay == 0:
        out = boundary[None] + cumulative_integral(moved, h, axis=0, order=order)
        return np.moveaxis(out, 0, axis)
    if radius is None:
        raise GridError("a decaying ODE needs the radial coordinate")
    x = np.asarray(radius, dtype=float).reshape((-1,) + (1,) * boundary.ndim)
    if x.shape[0] != moved.shape[0]:
        raise GridError("radius length does not match the integration axis")
    w = x**decay
    out = (w[0] * boundary[None] + cumulative_integral(w * moved, h, axis=0, order=order)) / w
    return np.moveaxis(out, 0, axis)


def axis_weights(grid, axis):
    """Quadrature weights along one slice axis of ``grid``."""
    i = grid.axes.index(axis)
    n = grid.slice_shape[i]
    h = grid.spacing[i]
    if axis in grid.periodic_axes:
        return np.full(n, h)
    if axis == "s":
        return cell_centred_weights(n, h, grid.scheme_order)
    return bounded_weights(n, h, grid.scheme_order)


def cell_centred_weights(n, h, order=2):
    """Quadrature over ``n`` cells sampled at their centres.

    Order 2 is the midpoint rule.  Order 4 adds the leading Euler-Maclaurin
    correction ``h**2 / 24 * (f'(b) - f'(a))`` with the end slopes taken from
    the quadratic through the three outermost samples.
    """
    w = np.full(n, float(h))
    if order == 4:
        if n < 6:
            raise GridError("fourth-order cell-centred quadrature needs at least 6 cells")
        end = h * np.array([2.0, -3.0, 1.0]) / 24.0
        w[:3] += end
        w[-3:] += end[::-1]
    return w


def slice_weights(grid):
    w = [axis_weights(grid, a) for a in grid.axes]
    return w[0][:, None, None] * w[1][None, :, None] * w[2][None, None, :]


def transverse_weights(grid):
    """Weights for the two transverse axes only (shape ``(n_a, n_b)``)."""
    _, a, b = grid.axes
    return axis_weights(grid, a)[:, None] * axis_weights(grid, b)[None, :]


def integrate_transverse(grid, planes):
    """Integrate over the two transverse axes; leading axes are kept."""
    return np.tensordot(planes, transverse_weights(grid), axes=([-2, -1], [0, 1]))


def integrate_line(values, h, order=2):
    """Quadrature of samples on a uniform closed interval (trapezoid for order 2)."""
    values = np.asarray(values, dtype=float)
    return float(bounded_weights(values.shape[0], h, order) @ values)


def partial_integral(values, h, upper, order=2):
    """Integral of uniformly sampled ``values`` from the first sample to ``upper``.

    ``upper`` is measured from the first sample and may fall between grid
    points; the running integral is interpolated with a local polynomial of
    degree ``order``.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    running = cumulative_integral(values, h, axis=0, order=order)
    pos = upper / h
    if pos <= 0:
        return np.zeros(values.shape[1:])
    if pos >= n - 1:
        return running[-1]
    j = int(round(pos))
    if abs(pos - j) < 1e-9:
        return running[j]
    width = order + 1
    start = min(max(int(math.floor(pos)) - order // 2, 0), n - width)
    nodes = np.arange(start, start + width)
    coeff = np.array([
        np.prod([(pos - m) / (k - m) for m in nodes if m != k]) for k in nodes
    ])
    return np.tensordot(coeff, running[start:start + width], axes=(0, 0))


# -- FieldSlice-level operations ----------------------------------------------


def deriv_periodic(f: FieldSlice, axis: str) -> FieldSlice:
    """Periodic centred derivative of a slice along ``x``, ``y``, ``z`` (Cauchy) or ``phi``."""
    grid = f.grid
    if axis not in grid.axes or axis not in grid.periodic_axes:
        raise GridError(f"axis {axis!r} is not periodic for geometry {grid.geometry}")
    i = grid.axes.index(axis)
    return f.like(diff_periodic(f.samples, grid.spacing[i], i, grid.scheme_order))


def deriv_bounded(f: FieldSlice, axis: str) -> FieldSlice:
    """Derivative along a bounded axis (``z``, ``r`` or ``s``)."""
    grid = f.grid
    if axis not in grid.axes or axis in grid.periodic_axes:
        raise GridError(f"axis {axis!r} is not a bounded axis for geometry {grid.geometry}")
    i = grid.axes.index(axis)
    return f.like(diff_bounded(f.samples, grid.spacing[i], i, grid.scheme_order))


def quadrature_slice(f: FieldSlice) -> float:
    """Integral of a slice in coordinate measure."""
    check_finite(f.samples, "quadrature integrand")
    return float(np.sum(slice_weights(f.grid) * f.samples))


def quadrature_volume(series, h, order=2):
    """Integrate one slice-integral value per marching step along the marching axis."""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        return 0.0
    return integrate_line(series, h, order=min(order, 4) if series.size >= 4 else 2)
