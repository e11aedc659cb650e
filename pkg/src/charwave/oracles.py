"""Closed-form solutions used as ground truth.

Every evaluator takes coordinates in array-layout order: ``(t, z, x, y)`` for
the Cauchy chart, ``(u, z, x, y)`` for the null-plane chart and
``(u, r, s, phi)`` for the null-cone chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .grid import GridError


class Bump:
    """Compactly supported polynomial pulse ``A (1 - xi**2)**power``, ``xi = (x - c) / w``.

    ``power = 5`` gives a C4 profile.
    """

    def __init__(self, center=0.0, width=1.0, amplitude=1.0, power=5):
        self.center = float(center)
        self.width = float(width)
        self.amplitude = float(amplitude)
        self.power = int(power)
        base = Polynomial([1.0, 0.0, -1.0]) ** self.power * self.amplitude
        self._polys = [base]
        for _ in range(4):
            self._polys.append(self._polys[-1].deriv())

    def __call__(self, x, deriv=0):
        xi = (np.asarray(x, dtype=float) - self.center) / self.width
        inside = np.abs(xi) < 1.0
        return np.where(inside, self._polys[deriv](xi), 0.0) / self.width**deriv

    def __repr__(self):
        return f"Bump(center={self.center}, width={self.width}, amplitude={self.amplitude}, power={self.power})"


@dataclass
class OracleSolution:
    name: str
    chart: str
    fields: dict
    params: dict = field(default_factory=dict)

    def __call__(self, var, *coords):
        return self.fields[var](*coords)

    def __contains__(self, var):
        return var in self.fields


# -- Cauchy chart -------------------------------------------------------------------


def oracle_cauchy_plane_wave(modes=(1, 0, 0), lengths=(1.0, 1.0, 1.0), phase=0.0):
    """``psi = sin(k . x - |k| t + phase)`` with integer mode numbers ``(m_z, m_x, m_y)``."""
    kz, kx, ky = (2 * math.pi * m / L for m, L in zip(modes, lengths))
    w = math.sqrt(kx**2 + ky**2 + kz**2)

    def th(t, z, x, y):
        return kx * x + ky * y + kz * z - w * t + phase

    fields = {
        "psi": lambda t, z, x, y: np.sin(th(t, z, x, y)),
        "U": lambda t, z, x, y: -w * np.cos(th(t, z, x, y)),
        "P": lambda t, z, x, y: kx * np.cos(th(t, z, x, y)),
        "Q": lambda t, z, x, y: ky * np.cos(th(t, z, x, y)),
        "R": lambda t, z, x, y: kz * np.cos(th(t, z, x, y)),
    }
    return OracleSolution("cauchy_plane_wave", "cauchy", fields,
                          {"modes": tuple(modes), "lengths": tuple(lengths), "omega": w})


# -- null-plane chart -------------------------------------------------------------------


def oracle_plane_wave(kz, kx, ky=0.0):
    """``psi = sin(omega u + kz z + kx x + ky y)`` with ``omega = (kz**2 + kx**2 + ky**2) / (2 kz)``.

    Includes the nine derivative variables of the derivative system.
    """
    if kz == 0:
        raise GridError("kz must be non-zero")
    w = (kz**2 + kx**2 + ky**2) / (2 * kz)

    def th(u, z, x, y):
        return w * u + kz * z + kx * x + ky * y

    def c(a):
        return lambda u, z, x, y: a * np.cos(th(u, z, x, y))

    def s(a):
        return lambda u, z, x, y: -a * np.sin(th(u, z, x, y))

    fields = {
        "psi": lambda u, z, x, y: np.sin(th(u, z, x, y)),
        "R": c(kz), "P": c(kx), "Q": c(ky),
        "Rx": s(kz * kx), "Ry": s(kz * ky), "Rz": s(kz * kz),
        "Px": s(kx * kx), "Qx": s(kx * ky), "Py": s(kx * ky), "Qy": s(ky * ky),
        "Pu": s(w * kx), "Qu": s(w * ky), "Ru": s(w * kz),
    }
    return OracleSolution("plane_wave", "plane", fields,
                          {"kz": kz, "kx": kx, "ky": ky, "omega": w})


def oracle_plane_transverse(k=1.0, Lx=2 * math.pi):
    """``psi = sin(k (u + z - x))``: a wave travelling along ``x``."""
    mode = k * Lx / (2 * math.pi)
    if abs(mode - round(mode)) > 1e-9:
        raise GridError(f"k = {k} is not an integer mode of the periodic length {Lx}")
    sol = oracle_plane_wave(k, -k, 0.0)
    sol.name = "plane_transverse"
    sol.params.update(k=k, Lx=Lx)
    return sol


def oracle_plane_advection(profile):
    """``(x, y)``-independent solution with ``P = Q = 0``: ``R = G(z + u/2)``."""
    fields = {
        "R": lambda u, z, x, y: profile(z + 0.5 * u) + 0 * x + 0 * y,
        "P": lambda u, z, x, y: 0 * (u + z + x + y),
        "Q": lambda u, z, x, y: 0 * (u + z + x + y),
    }
    return OracleSolution("plane_advection", "plane", fields, {"profile": profile})


# -- null-cone chart -------------------------------------------------------------------


def _S(s):
    return np.sqrt(1.0 - s**2)


def oracle_cone_ingoing(profile=None):
    """Spherically symmetric ``g = h(u + 2r)``: ``R = 2h'``, ``P = Q = 0``."""
    h = Bump(3.5, 2.0) if profile is None else profile

    def zero(u, r, s, phi):
        return 0 * (u + r + s + phi)

    fields = {
        "g": lambda u, r, s, phi: h(u + 2 * r) + 0 * (s + phi),
        "R": lambda u, r, s, phi: 2 * h(u + 2 * r, 1) + 0 * (s + phi),
        "P": zero, "Q": zero,
        "Ru": lambda u, r, s, phi: 2 * h(u + 2 * r, 2) + 0 * (s + phi),
        "Rs_hat": zero, "Rphi_hat": zero,
        "Rr": lambda u, r, s, phi: 4 * h(u + 2 * r, 2) + 0 * (s + phi),
        "Ps_hat": zero, "Pphi_hat": zero, "Qs_hat": zero, "Qphi_hat": zero,
        "Pu": zero, "Qu": zero,
    }
    return OracleSolution("cone_ingoing", "cone", fields, {"profile": h})


def oracle_cone_outgoing(profile=None):
    """``g = f(u)``: pure gauge along the cone, ``R = P = Q = 0``."""
    f = Bump(0.5, 1.5) if profile is None else profile

    def zero(u, r, s, phi):
        return 0 * (u + r + s + phi)

    fields = {"g": lambda u, r, s, phi: f(u) + 0 * (r + s + phi), "R": zero, "P": zero, "Q": zero}
    return OracleSolution("cone_outgoing", "cone", fields, {"profile": f})


def oracle_cone_dipole(profile=None):
    """Axial dipole ``psi = d/dz [f(t - r) / r]``, i.e. ``g = s (-f'(u) - f(u)/r)``.

    All terms of the cone system are active except those carrying ``Q``.
    """
    f = Bump(0.5, 1.5) if profile is None else profile

    def F(u, r, k=0):
        # d^k/du^k of -f' - f/r
        return -f(u, k + 1) - f(u, k) / r

    def zero(u, r, s, phi):
        return 0 * (u + r + s + phi)

    fields = {
        "g": lambda u, r, s, phi: s * F(u, r) + 0 * phi,
        "R": lambda u, r, s, phi: s * f(u) / r**2 + 0 * phi,
        "P": lambda u, r, s, phi: _S(s) * F(u, r) / r + 0 * phi,
        "Q": zero,
        "Ru": lambda u, r, s, phi: s * f(u, 1) / r**2 + 0 * phi,
        "Rs_hat": lambda u, r, s, phi: _S(s) * f(u) / r**3 + 0 * phi,
        "Rphi_hat": zero,
        "Rr": lambda u, r, s, phi: -2 * s * f(u) / r**3 + 0 * phi,
        "Ps_hat": lambda u, r, s, phi: -2 * s * F(u, r) / r**2 + 0 * phi,
        "Pphi_hat": zero, "Qs_hat": zero, "Qphi_hat": zero,
        "Pu": lambda u, r, s, phi: _S(s) * F(u, r, 1) / r + 0 * phi,
        "Qu": zero,
    }
    return OracleSolution("cone_dipole", "cone", fields, {"profile": f})


def oracle_cone_quadrupole(profile=None):
    """Sectoral quadrupole ``g = (1 - s**2) cos(2 phi) G`` with
    ``G = f'' + 3 f'/r + 3 f/r**2``; activates ``Q`` and every ``phi`` term.

    Each ``phi``-dependent field carries enough powers of ``sqrt(1 - s**2)``
    to stay smooth in ``s`` at the poles.
    """
    f = Bump(0.5, 1.5) if profile is None else profile

    def G(u, r, ku=0, kr=0):
        # d^ku/du^ku d^kr/dr^kr of f'' + 3 f'/r + 3 f/r**2
        terms = ((1.0, 2, 0), (3.0, 1, 1), (3.0, 0, 2))
        out = 0.0
        for coef, order, power in terms:
            # d^kr/dr^kr r**-power
            rad = coef
            for j in range(kr):
                rad = rad * (-(power + j))
            out = out + rad * f(u, order + ku) / r ** (power + kr)
        return out

    def c2(phi):
        return np.cos(2 * phi)

    def s2(phi):
        return np.sin(2 * phi)

    fields = {
        "g": lambda u, r, s, phi: (1 - s**2) * c2(phi) * G(u, r),
        "R": lambda u, r, s, phi: (1 - s**2) * c2(phi) * G(u, r, 0, 1),
        "P": lambda u, r, s, phi: -2 * s * _S(s) * c2(phi) * G(u, r) / r,
        "Q": lambda u, r, s, phi: -2 * _S(s) * s2(phi) * G(u, r) / r,
        "Ru": lambda u, r, s, phi: (1 - s**2) * c2(phi) * G(u, r, 1, 1),
        "Pu": lambda u, r, s, phi: -2 * s * _S(s) * c2(phi) * G(u, r, 1) / r,
        "Qu": lambda u, r, s, phi: -2 * _S(s) * s2(phi) * G(u, r, 1) / r,
        "Rs_hat": lambda u, r, s, phi: -2 * s * _S(s) * c2(phi) * G(u, r, 0, 1) / r,
        "Rphi_hat": lambda u, r, s, phi: -2 * _S(s) * s2(phi) * G(u, r, 0, 1) / r,
        "Rr": lambda u, r, s, phi: (1 - s**2) * c2(phi) * G(u, r, 0, 2),
        "Ps_hat": lambda u, r, s, phi: -2 * (1 - 3 * s**2) * c2(phi) * G(u, r) / r**2,
        "Pphi_hat": lambda u, r, s, phi: 4 * s * s2(phi) * G(u, r) / r**2,
        "Qs_hat": lambda u, r, s, phi: 2 * s * s2(phi) * G(u, r) / r**2,
        "Qphi_hat": lambda u, r, s, phi: -4 * c2(phi) * G(u, r) / r**2,
    }
    return OracleSolution("cone_quadrupole", "cone", fields, {"profile": f})


ORACLES = {
    "plane_transverse": oracle_plane_transverse,
    "cone_ingoing": oracle_cone_ingoing,
    "cone_dipole": oracle_cone_dipole,
    "cone_quadrupole": oracle_cone_quadrupole,
}


# -- sampling oracles into free data -------------------------------------------------


def plane_data(oracle, grid):
    from .nullplane import PlaneCharData

    return PlaneCharData.from_functions(
        grid,
        lambda z, x, y: oracle("R", 0.0, z, x, y),
        lambda u, x, y: oracle("P", u, 0.0, x, y),
        lambda u, x, y: oracle("Q", u, 0.0, x, y),
        (lambda u, x, y: oracle("psi", u, 0.0, x, y)) if "psi" in oracle else None,
    )


def plane_deriv_data(oracle, grid):
    from .nullplane import DERIV_NORMAL, DERIV_NULL, PlaneDerivData

    return PlaneDerivData.from_functions(
        grid,
        [lambda z, x, y, n=n: oracle(n, 0.0, z, x, y) for n in DERIV_NORMAL],
        [lambda u, x, y, n=n: oracle(n, u, 0.0, x, y) for n in DERIV_NULL],
        lambda u, x, y: oracle("Pu", u, 0.0, x, y),
        lambda u, x, y: oracle("Qu", u, 0.0, x, y),
    )


def cone_data(oracle, grid):
    from .nullcone import ConeCharData

    r0 = grid.r0
    return ConeCharData.from_functions(
        grid,
        lambda r, s, phi: oracle("R", 0.0, r, s, phi),
        lambda u, s, phi: oracle("P", u, r0, s, phi),
        lambda u, s, phi: oracle("Q", u, r0, s, phi),
        (lambda u, s, phi: oracle("g", u, r0, s, phi)) if "g" in oracle else None,
    )


def cone_deriv_data(oracle, grid):
    from .nullcone import DERIV_NORMAL, DERIV_NULL, ConeDerivData

    r0 = grid.r0
    return ConeDerivData.from_functions(
        grid,
        [lambda r, s, phi, n=n: oracle(n, 0.0, r, s, phi) for n in DERIV_NORMAL],
        [lambda u, s, phi, n=n: oracle(n, u, r0, s, phi) for n in DERIV_NULL],
        lambda u, s, phi: oracle("Pu", u, r0, s, phi),
        lambda u, s, phi: oracle("Qu", u, r0, s, phi),
    )


def sample_on_diagonal(oracle, grid, var):
    """Oracle values on the top surface, indexed like :class:`DiagonalRecord` planes."""
    rad, a, b = grid.mesh()
    if grid.geometry == "nullplane":
        u = grid.T - rad
    else:
        u = grid.T + grid.r0 - rad
    return np.broadcast_to(oracle(var, u, rad, a, b), grid.slice_shape)


def sample_on_slice(oracle, grid, var, u):
    rad, a, b = grid.mesh()
    return np.broadcast_to(oracle(var, u, rad, a, b), grid.slice_shape)
