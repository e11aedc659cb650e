"""Symbolic checks of the closed-form solutions.

Each oracle is rebuilt from its potential with sympy.  The test checks that the
potential solves the wave equation in the relevant chart and that every field
the oracle supplies matches the symbolic derivative at random points.
"""

import math

import numpy as np
import pytest
import sympy as sp

from charwave import oracles as O
from charwave.grid import GridError

u, t, r, s, phi, x, y, z = sp.symbols("u t r s phi x y z", real=True)
S = sp.sqrt(1 - s**2)


def sym_bump(b, arg):
    c, w, a = (sp.Rational(str(v)) for v in (b.center, b.width, b.amplitude))
    return a * (1 - ((arg - c) / w) ** 2) ** b.power


def compare(oracle, exprs, syms, boxes, n=12, seed=0):
    rng = np.random.default_rng(seed)
    assert set(exprs) <= set(oracle.fields)
    for name, e in exprs.items():
        f = sp.lambdify(syms, e, "numpy")
        for _ in range(n):
            pt = [rng.uniform(lo, hi) for lo, hi in boxes]
            assert float(oracle(name, *pt)) == pytest.approx(float(f(*pt)), rel=1e-9, abs=1e-9), name


# -- Cauchy ---------------------------------------------------------------------------


@pytest.mark.parametrize("modes", [(1, 0, 0), (0, 1, 0), (1, 2, -1)])
def test_cauchy_plane_wave(modes):
    lengths = (1.0, 2.0, 0.5)
    orc = O.oracle_cauchy_plane_wave(modes, lengths)
    k = [2 * sp.pi * m / sp.Rational(str(L)) for m, L in zip(modes, lengths)]
    w = sp.sqrt(sum(kk**2 for kk in k))
    psi = sp.sin(k[0] * z + k[1] * x + k[2] * y - w * t)
    assert sp.simplify(sp.diff(psi, t, 2) - sum(sp.diff(psi, v, 2) for v in (x, y, z))) == 0
    exprs = {"psi": psi, "U": psi.diff(t), "P": psi.diff(x), "Q": psi.diff(y), "R": psi.diff(z)}
    compare(orc, exprs, (t, z, x, y), [(0, 1)] * 4)


# -- null plane -------------------------------------------------------------------------


def plane_wave_operator(psi):
    # u = t - z: the wave operator becomes 2 psi_uz - psi_zz - psi_xx - psi_yy
    return 2 * psi.diff(u, z) - psi.diff(z, 2) - psi.diff(x, 2) - psi.diff(y, 2)


def plane_fields(psi):
    R, P, Q = psi.diff(z), psi.diff(x), psi.diff(y)
    return {"psi": psi, "R": R, "P": P, "Q": Q,
            "Rx": R.diff(x), "Ry": R.diff(y), "Rz": R.diff(z),
            "Px": P.diff(x), "Qx": Q.diff(x), "Py": P.diff(y), "Qy": Q.diff(y),
            "Pu": P.diff(u), "Qu": Q.diff(u), "Ru": R.diff(u)}


@pytest.mark.parametrize("k", [(1.0, -1.0, 0.0), (2.0, 0.5, -1.5), (-1.0, 2.0, 1.0)])
def test_plane_wave(k):
    orc = O.oracle_plane_wave(*k)
    kz, kx, ky = (sp.Rational(str(v)) for v in k)
    w = sp.Rational(1, 2) * (kz**2 + kx**2 + ky**2) / kz
    psi = sp.sin(w * u + kz * z + kx * x + ky * y)
    assert sp.simplify(plane_wave_operator(psi)) == 0
    compare(orc, plane_fields(psi), (u, z, x, y), [(0, 1), (0, 1), (0, 6.3), (0, 6.3)])


def test_plane_transverse():
    orc = O.oracle_plane_transverse()
    psi = sp.sin(u + z - x)
    assert sp.simplify(plane_wave_operator(psi)) == 0
    compare(orc, plane_fields(psi), (u, z, x, y), [(0, 1), (0, 1), (0, 6.3), (0, 6.3)])


def test_plane_transverse_rejects_non_integer_mode():
    with pytest.raises(GridError, match="integer mode"):
        O.oracle_plane_transverse(k=1.5)


def test_plane_wave_rejects_zero_kz():
    with pytest.raises(GridError):
        O.oracle_plane_wave(0.0, 1.0)


def test_plane_advection():
    b = O.Bump(0.8, 0.7)
    orc = O.oracle_plane_advection(b)
    # potential H with H' = G
    psi = sp.integrate(sym_bump(b, z + u / 2), z)
    assert sp.simplify(plane_wave_operator(psi)) == 0
    exprs = {k: v for k, v in plane_fields(psi).items() if k in ("R", "P", "Q")}
    compare(orc, exprs, (u, z, x, y), [(0, 0.3), (0.3, 0.8), (0, 6.3), (0, 6.3)])


# -- null cone --------------------------------------------------------------------------


def cone_wave_operator(g):
    """Wave operator on ``g = r psi`` in ``(u, r, s, phi)`` with ``u = t - r``.

    In ``(t, r)`` it reads ``g_tt - g_rr - L g / r**2`` with ``L`` the sphere
    Laplacian; changing to ``u`` gives ``2 g_ur - g_rr - L g / r**2``.
    """
    L = sp.diff((1 - s**2) * g.diff(s), s) + g.diff(phi, 2) / (1 - s**2)
    return 2 * g.diff(u, r) - g.diff(r, 2) - L / r**2


def cone_fields(g):
    R = g.diff(r)
    P = S * g.diff(s) / r
    Q = g.diff(phi) / (r * S)
    return {"g": g, "R": R, "P": P, "Q": Q, "Ru": R.diff(u), "Pu": P.diff(u), "Qu": Q.diff(u),
            "Rs_hat": S * R.diff(s) / r, "Rphi_hat": R.diff(phi) / (r * S), "Rr": R.diff(r),
            "Ps_hat": sp.diff(S * P, s) / r, "Pphi_hat": P.diff(phi) / (r * S),
            "Qs_hat": S * Q.diff(s) / r, "Qphi_hat": Q.diff(phi) / (r * S)}


CONE_BOX = [(0.0, 1.0), (1.0, 2.0), (-0.9, 0.9), (0.0, 6.28)]


def test_cone_ingoing():
    orc = O.oracle_cone_ingoing()
    g = sym_bump(orc.params["profile"], u + 2 * r)
    assert sp.simplify(cone_wave_operator(g)) == 0
    compare(orc, cone_fields(g), (u, r, s, phi), CONE_BOX)


def test_cone_outgoing():
    orc = O.oracle_cone_outgoing()
    g = sym_bump(orc.params["profile"], u)
    assert sp.simplify(cone_wave_operator(g)) == 0
    exprs = {k: v for k, v in cone_fields(g).items() if k in ("g", "R", "P", "Q")}
    compare(orc, exprs, (u, r, s, phi), CONE_BOX)


def test_cone_dipole():
    orc = O.oracle_cone_dipole()
    f = sym_bump(orc.params["profile"], u)
    # d/dz of f(t - r)/r, written in (u, r, s)
    g = s * (-f.diff(u) - f / r)
    assert sp.simplify(cone_wave_operator(g)) == 0
    compare(orc, cone_fields(g), (u, r, s, phi), CONE_BOX)


def test_cone_quadrupole():
    orc = O.oracle_cone_quadrupole()
    f = sym_bump(orc.params["profile"], u)
    G = f.diff(u, 2) + 3 * f.diff(u) / r + 3 * f / r**2
    g = (1 - s**2) * sp.cos(2 * phi) * G
    assert sp.simplify(cone_wave_operator(g)) == 0
    compare(orc, cone_fields(g), (u, r, s, phi), CONE_BOX)


def test_cone_dipole_is_z_derivative():
    """The dipole potential is ``d/dz`` of the monopole ``f(t - r) / r``."""
    orc = O.oracle_cone_dipole()
    X, Y, Z, T = sp.symbols("X Y Z T", real=True)
    rr = sp.sqrt(X**2 + Y**2 + Z**2)
    f = sp.Function("f")
    psi = sp.diff(f(T - rr) / rr, Z)
    pt = {X: 0.3, Y: -0.4, Z: 1.1, T: 1.6}
    b = orc.params["profile"]
    w = sp.Symbol("w")
    val = psi.subs(f, sp.Lambda(w, sym_bump(b, w))).doit().subs(pt)
    rad = math.sqrt(0.3**2 + 0.4**2 + 1.1**2)
    expected = orc("g", 1.6 - rad, rad, 1.1 / rad, 0.0) / rad
    assert float(val) == pytest.approx(expected, rel=1e-10)


def test_bump_derivatives():
    b = O.Bump(0.5, 1.5, amplitude=2.0)
    e = sym_bump(b, x)
    for k in range(4):
        f = sp.lambdify(x, e.diff(x, k))
        for pt in (-0.6, 0.1, 0.5, 1.7):
            assert b(pt, k) == pytest.approx(f(pt), rel=1e-12, abs=1e-12)
    assert b(2.5) == 0.0 and b(-1.5, 2) == 0.0
