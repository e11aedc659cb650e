"""Characteristic problem with a null-cone data surface.

Coordinates ``(u, r, s, phi)`` with ``u = t - r`` and ``s = cos(theta)``;
``g = r psi``, ``R = g_r``, ``P = g_s sqrt(1 - s**2) / r`` and
``Q = g_phi / (sqrt(1 - s**2) r)``.  With ``S = sqrt(1 - s**2)``:

    2 R_u = R_r + (S/r) P_s + Q_phi / (r S) - s P / (r S)
    P_r   = (S/r) R_s - P / r
    Q_r   = R_phi / (r S) - Q / r
    g_r   = R

``R`` is marched in ``u`` from the cone ``u = 0``; ``P, Q, g`` are integrated
in ``r`` from the worldtube ``r = r0``.  The ``s``-terms of the ``R`` equation
are evaluated in the equivalent form ``(1/r) d/ds (S P)``, which stays smooth
when ``P`` carries a factor ``S``.

The derivative system uses the rescaled variables
``w = (R^s, R^phi, R_r, P^s, P^phi, Q^s, Q^phi)`` (see ``docs/derivations.md``),
for which ``B^a d_a w = D w`` with symmetric ``B^a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _march
from .grid import GridError, GridSpec, diff_bounded, diff_periodic, march_ode

NORMAL = ("R",)
NULL = ("P", "Q", "g")
DERIV_NORMAL = ("Rs_hat", "Rphi_hat", "Rr")
DERIV_NULL = ("Ps_hat", "Pphi_hat", "Qs_hat", "Qphi_hat")

A_U = {"R": 2.0, "P": 0.0, "Q": 0.0}
A_R = {"R": -1.0, "P": 1.0, "Q": 1.0}
B_U = dict(zip(DERIV_NORMAL + DERIV_NULL, (2.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0)))
B_R = dict(zip(DERIV_NORMAL + DERIV_NULL, (0.0, 0.0, -1.0, 1.0, 1.0, 1.0, 1.0)))


def _check_cone(grid):
    if grid.geometry != "nullcone":
        raise GridError(f"expected a nullcone grid, got {grid.geometry}")


def _geometry(grid):
    r, s, _ = grid.mesh()
    return r, s, np.sqrt(1.0 - s**2)


def principal_matrices(r, s):
    """``A^u, A^r, A^s, A^phi`` and ``D`` for ``v = (R, P, Q)`` at one point."""
    S = np.sqrt(1.0 - s**2)
    Au = np.diag([2.0, 0.0, 0.0])
    Ar = np.diag([-1.0, 1.0, 1.0])
    As = -S / r * np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
    Aphi = -1.0 / (r * S) * np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=float)
    D = -1.0 / r * np.array([[0, s / S, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    return Au, Ar, As, Aphi, D


def source_matrix_solution(r):
    """``D~ = -(1/r) diag(0, 1, 1)``; ``d_a(v A^a v) = 2 v D~ v``."""
    return -np.diag([0.0, 1.0, 1.0]) / r


@dataclass
class ConeCharData:
    """``R`` on the cone ``u = 0``; ``P, Q, g`` on the worldtube at half steps."""

    grid: GridSpec
    R_on_u0: np.ndarray
    P_on_r0: np.ndarray
    Q_on_r0: np.ndarray
    g_on_r0: np.ndarray

    def __post_init__(self):
        _check_cone(self.grid)
        self.R_on_u0 = _as_shape(self.R_on_u0, self.grid.slice_shape, "R_on_u0")
        for name in ("P_on_r0", "Q_on_r0", "g_on_r0"):
            setattr(self, name, _as_shape(getattr(self, name), self.grid.stage_shape, name))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.slice_shape), *(np.zeros(grid.stage_shape) for _ in range(3)))

    @classmethod
    def from_functions(cls, grid, R0, P0, Q0, g0=None):
        """Sample ``R0(r, s, phi)`` and ``P0(u, s, phi)`` etc. on the grid."""
        r, s, phi = grid.mesh()
        u = grid.march_coords(half=True)[:, None, None]
        s2, phi2 = s[0], phi[0]
        shape = grid.stage_shape
        g = np.zeros(shape) if g0 is None else np.broadcast_to(g0(u, s2, phi2), shape)
        return cls(grid, np.broadcast_to(R0(r, s, phi), grid.slice_shape),
                   np.broadcast_to(P0(u, s2, phi2), shape),
                   np.broadcast_to(Q0(u, s2, phi2), shape), g)

    def __add__(self, other):
        return ConeCharData(self.grid, self.R_on_u0 + other.R_on_u0, self.P_on_r0 + other.P_on_r0,
                            self.Q_on_r0 + other.Q_on_r0, self.g_on_r0 + other.g_on_r0)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, a):
        return ConeCharData(self.grid, a * self.R_on_u0, a * self.P_on_r0, a * self.Q_on_r0,
                            a * self.g_on_r0)


def _as_shape(a, shape, name):
    a = np.array(a, dtype=float)
    if a.shape != shape:
        raise GridError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise GridError(f"{name} contains non-finite values")
    return a


@dataclass
class ConeCharState:
    step: int
    R: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    g: np.ndarray

    def u(self, grid):
        return self.step * grid.march_step

    def psi(self, grid):
        r, _, _ = grid.mesh()
        return self.g / r


# -- operations ----------------------------------------------------------------


def cone_hypersurface_solve(grid, R, boundary):
    """Integrate the worldtube data ``(P0, Q0, g0)`` outward in ``r``."""
    _check_cone(grid)
    R = np.asarray(R, dtype=float)
    if R.shape != grid.slice_shape:
        raise GridError(f"R has shape {R.shape}, expected {grid.slice_shape}")
    P0, Q0, g0 = boundary
    r, s, S = _geometry(grid)
    dr, ds, dphi = grid.spacing
    p = grid.scheme_order
    rr = grid.coords("r")
    P = march_ode(S / r * diff_bounded(R, ds, 1, p), P0, dr, order=p, radius=rr, decay=1)
    Q = march_ode(diff_periodic(R, dphi, 2, p) / (r * S), Q0, dr, order=p, radius=rr, decay=1)
    g = march_ode(R, g0, dr, order=p)
    return P, Q, g


def cone_rhs(grid, R, P, Q):
    """``R_u`` on one slice."""
    r, s, S = _geometry(grid)
    dr, ds, dphi = grid.spacing
    p = grid.scheme_order
    return 0.5 * (diff_bounded(R, dr, 0, p) + diff_bounded(S * P, ds, 1, p) / r
                  + diff_periodic(Q, dphi, 2, p) / (r * S))


def cone_source_density(grid, P, Q):
    """Pointwise ``2 v D~ v = -2 (P**2 + Q**2) / r``, non-positive by construction."""
    r, _, _ = _geometry(grid)
    return -2.0 * (P**2 + Q**2) / r


def _boundary_fn(data):
    def boundary(k):
        return (data.P_on_r0[k], data.Q_on_r0[k], data.g_on_r0[k])
    return boundary


def _solver(grid):
    def solve(y, bnd, u):
        return np.stack(cone_hypersurface_solve(grid, y[0], bnd))

    def rhs(y, null, u):
        return cone_rhs(grid, y[0], null[0], null[1])[None]

    def source(y, null):
        return cone_source_density(grid, null[0], null[1])

    return solve, rhs, source


def cone_advance_R(grid, state: ConeCharState, data: ConeCharData):
    """One Runge-Kutta step of ``R``."""
    _check_cone(grid)
    if state.step >= grid.n_march:
        raise GridError("cannot step beyond u = T")
    solve, rhs, _ = _solver(grid)
    boundary = _boundary_fn(data)

    def f(y, u, half=0):
        return rhs(y, solve(y, boundary(2 * state.step + half), u), u)

    return _march._rk_step(f, state.R[None], state.u(grid), grid.march_step, grid.scheme_order)[0]


def cone_state(grid, data, R, step):
    P, Q, g = cone_hypersurface_solve(grid, R, _boundary_fn(data)(2 * step))
    return ConeCharState(step, R, P, Q, g)


def cone_evolve(data: ConeCharData, grid: GridSpec = None, snapshots=()):
    """March the null-cone problem; records the volume source per slice."""
    grid = data.grid if grid is None else grid
    _check_cone(grid)
    solve, rhs, source = _solver(grid)
    return _march.march(grid, data.R_on_u0[None], _boundary_fn(data), solve, rhs, NORMAL, NULL,
                        source=source, snapshots=snapshots)


# -- derivative system -------------------------------------------------------------


def principal_matrices_deriv(r, s):
    """``B^u, B^r, B^s, B^phi`` for the rescaled derivative variables (arrays broadcast
    over ``r`` and ``s``; leading axes are the matrix indices)."""
    r, s = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    S = np.sqrt(1.0 - s**2)
    zeros = np.zeros((7, 7) + r.shape)
    Bu = zeros.copy()
    Br = zeros.copy()
    for i, (bu, br) in enumerate(zip((2, 2, 2, 0, 0, 0, 0), (0, 0, -1, 1, 1, 1, 1))):
        Bu[i, i] = bu
        Br[i, i] = br
    Bs = zeros.copy()
    for i, j in ((0, 2), (0, 3), (1, 4)):
        Bs[i, j] = Bs[j, i] = -S / r
    Bphi = zeros.copy()
    for i, j in ((0, 5), (1, 2), (1, 6)):
        Bphi[i, j] = Bphi[j, i] = -1.0 / (r * S)
    return Bu, Br, Bs, Bphi


def source_matrix_deriv(r, s):
    """``D`` in ``B^a d_a w = D w`` (derived entry by entry; see docs/derivations.md)."""
    r, s = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    S = np.sqrt(1.0 - s**2)
    q = s / (r * S)
    D = np.zeros((7, 7) + r.shape)
    D[0, 6] = q
    D[1, 4] = -2 * q
    D[2, 0] = -q
    D[2, 3] = D[2, 6] = -2.0 / r
    D[3, 0] = -q
    D[3, 3] = -2.0 / r
    D[4, 1] = -q
    D[4, 4] = -2.0 / r
    D[5, 1] = q
    D[5, 5] = -2.0 / r
    D[6, 6] = -2.0 / r
    return D


def divergence_of_principal(r, s):
    """``d_a B^a``: only ``B^s`` depends on its own coordinate."""
    r, s = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    S = np.sqrt(1.0 - s**2)
    out = np.zeros((7, 7) + r.shape)
    for i, j in ((0, 2), (0, 3), (1, 4)):
        out[i, j] = out[j, i] = s / (r * S)
    return out


def derive_Dtilde(grid=None, r=None, s=None):
    """Symmetric part of ``2 D + d_a B^a`` on the ``(r, s)`` grid, shape ``(7, 7, n_r, n_s)``.

    ``d_a(w B^a w) = w D~ w`` for every solution of the derivative system.
    """
    if grid is not None:
        _check_cone(grid)
        r = grid.coords("r")[:, None]
        s = grid.coords("s")[None, :]
    raw = 2 * source_matrix_deriv(r, s) + divergence_of_principal(r, s)
    return 0.5 * (raw + np.swapaxes(raw, 0, 1))


def source_constant(grid):
    """``c = max |D~_ij|`` over the run volume."""
    return float(np.abs(derive_Dtilde(grid)).max())


@dataclass
class ConeDerivData:
    """Normal data ``(R^s, R^phi, R_r)`` on ``u = 0``; null data ``(P^s, P^phi, Q^s, Q^phi)``,
    ``P_u`` and ``Q_u`` on the worldtube (half steps)."""

    grid: GridSpec
    normal0: np.ndarray
    null_on_r0: np.ndarray
    Pu_on_r0: np.ndarray
    Qu_on_r0: np.ndarray

    @classmethod
    def from_char_data(cls, data: ConeCharData):
        """Differentiate and rescale the free data.

        ``S * d/ds`` of worldtube ``Q`` is evaluated as ``d/ds(S Q) + s Q / S``,
        accurate when the data carry a factor ``S``.
        """
        grid = data.grid
        r, s, S = _geometry(grid)
        dr, ds, dphi = grid.spacing
        p = grid.scheme_order
        r0 = grid.r0
        R0 = data.R_on_u0
        normal0 = np.stack([
            S * diff_bounded(R0, ds, 1, p) / r,
            diff_periodic(R0, dphi, 2, p) / (r * S),
            diff_bounded(R0, dr, 0, p),
        ])
        s2 = s[0]
        S2 = S[0]
        P0, Q0 = data.P_on_r0, data.Q_on_r0
        null = np.stack([
            diff_bounded(S2 * P0, ds, 1, p) / r0,
            diff_periodic(P0, dphi, 2, p) / (r0 * S2),
            (diff_bounded(S2 * Q0, ds, 1, p) + s2 * Q0 / S2) / r0,
            diff_periodic(Q0, dphi, 2, p) / (r0 * S2),
        ])
        half = 0.5 * grid.march_step
        return cls(grid, normal0, null, diff_bounded(P0, half, 0, p), diff_bounded(Q0, half, 0, p))

    @classmethod
    def from_functions(cls, grid, normal_fns, null_fns, Pu_fn, Qu_fn):
        r, s, phi = grid.mesh()
        u = grid.march_coords(half=True)[:, None, None]
        s2, phi2 = s[0], phi[0]
        shape = grid.stage_shape
        normal0 = np.stack([np.broadcast_to(f(r, s, phi), grid.slice_shape) for f in normal_fns])
        null = np.stack([np.broadcast_to(f(u, s2, phi2), shape) for f in null_fns])
        return cls(grid, normal0, null, np.broadcast_to(Pu_fn(u, s2, phi2), shape).copy(),
                   np.broadcast_to(Qu_fn(u, s2, phi2), shape).copy())


def cone_deriv_null_solve(grid, w_normal, boundary):
    a, b, _ = w_normal
    r, s, S = _geometry(grid)
    dr, ds, dphi = grid.spacing
    p = grid.scheme_order
    rr = grid.coords("r")
    sources = (
        diff_bounded(S * a, ds, 1, p) / r,
        diff_bounded(S * b, ds, 1, p) / r,
        diff_periodic(a, dphi, 2, p) / (r * S) + s * b / (r * S),
        diff_periodic(b, dphi, 2, p) / (r * S),
    )
    return np.stack([march_ode(src, b0, dr, order=p, radius=rr, decay=2)
                     for src, b0 in zip(sources, boundary)])


def cone_deriv_rhs(grid, w_normal, w_null):
    a, b, c = w_normal
    d, e, f, g = w_null
    r, s, S = _geometry(grid)
    dr, ds, dphi = grid.spacing
    p = grid.scheme_order
    two_Ru = c + d + g
    return 0.5 * np.stack([
        S / r * diff_bounded(two_Ru, ds, 1, p),
        diff_periodic(two_Ru, dphi, 2, p) / (r * S),
        diff_bounded(c, dr, 0, p) + diff_bounded(S * a, ds, 1, p) / r - 2 * d / r
        + diff_periodic(b, dphi, 2, p) / (r * S) - 2 * g / r,
    ])


def cone_deriv_source_density(grid, w, Dt=None):
    """Pointwise ``w D~ w`` for a stacked ``w`` of shape ``(7,) + slice``."""
    Dt = derive_Dtilde(grid) if Dt is None else Dt
    return np.einsum("ijrs,irsp,jrsp->rsp", Dt, w, w)


def cone_derivative_evolve(ddata: ConeDerivData, snapshots=()):
    """March the rescaled seven-variable derivative system."""
    grid = ddata.grid
    _check_cone(grid)
    Dt = derive_Dtilde(grid)
    return _march.march(
        grid, ddata.normal0, lambda k: ddata.null_on_r0[:, k],
        lambda y, bnd, u: cone_deriv_null_solve(grid, y, bnd),
        lambda y, nl, u: cone_deriv_rhs(grid, y, nl),
        DERIV_NORMAL, DERIV_NULL,
        source=lambda y, nl: cone_deriv_source_density(grid, np.concatenate([y, nl]), Dt),
        snapshots=snapshots,
    )


def cone_reconstruct_PuQu(grid, Rr, Ps_hat, Qphi_hat, Pu0, Qu0):
    """``P_u``, ``Q_u`` on a slice: attenuated worldtube value plus a quadrature in ``r``."""
    r, s, S = _geometry(grid)
    dr, ds, dphi = grid.spacing
    p = grid.scheme_order
    running = march_ode(Rr + Ps_hat + Qphi_hat, np.zeros_like(Pu0), dr, order=p)
    Pu = grid.r0 / r * Pu0[None] + S / (2 * r) * diff_bounded(running, ds, 1, p)
    Qu = grid.r0 / r * Qu0[None] + diff_periodic(running, dphi, 2, p) / (2 * r * S)
    return Pu, Qu


def cone_PuQu_from_run(run, ddata: ConeDerivData, step):
    snap = run.snapshots[step]
    k = 2 * step
    return cone_reconstruct_PuQu(run.grid, snap["Rr"], snap["Ps_hat"], snap["Qphi_hat"],
                                 ddata.Pu_on_r0[k], ddata.Qu_on_r0[k])


def differentiate_cone_slice(grid, fields):
    """Rescaled derivative variables computed by differencing a main-run slice."""
    r, s, S = _geometry(grid)
    dr, ds, dphi = grid.spacing
    p = grid.scheme_order
    R, P, Q = fields["R"], fields["P"], fields["Q"]
    return {
        "Rs_hat": S * diff_bounded(R, ds, 1, p) / r,
        "Rphi_hat": diff_periodic(R, dphi, 2, p) / (r * S),
        "Rr": diff_bounded(R, dr, 0, p),
        "Ps_hat": diff_bounded(S * P, ds, 1, p) / r,
        "Pphi_hat": diff_periodic(P, dphi, 2, p) / (r * S),
        "Qs_hat": (diff_bounded(S * Q, ds, 1, p) + s * Q / S) / r,
        "Qphi_hat": diff_periodic(Q, dphi, 2, p) / (r * S),
    }
