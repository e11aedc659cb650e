"""Characteristic problem with a null-plane data surface.

Unknowns ``(R, P, Q, psi)`` live on slices ``u = const`` over ``(z, x, y)``
with ``z`` in ``[0, T]`` and ``(x, y)`` periodic.  ``R`` is the normal
variable (data on ``u = 0``); ``P``, ``Q`` and ``psi`` are null variables
(data on ``z = 0``):

    2 R_u = P_x + Q_y + R_z,   P_z = R_x,   Q_z = R_y,   psi_z = R.

The seven first derivatives ``w = (R_x, R_y, R_z, P_x, Q_x, P_y, Q_y)`` obey
a decoupled system of the same canonical form, and ``P_u``, ``Q_u`` follow
from ``w`` by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _march
from .grid import GridError, GridSpec, diff_bounded, diff_periodic, march_ode

NORMAL = ("R",)
NULL = ("P", "Q", "psi")
DERIV_NORMAL = ("Rx", "Ry", "Rz")
DERIV_NULL = ("Px", "Qx", "Py", "Qy")

# diagonal entries of the principal matrices in the u and z directions
A_U = {"R": 2.0, "P": 0.0, "Q": 0.0}
A_Z = {"R": -1.0, "P": 1.0, "Q": 1.0}
B_U = {"Rx": 2.0, "Ry": 2.0, "Rz": 2.0, "Px": 0.0, "Qx": 0.0, "Py": 0.0, "Qy": 0.0}
B_Z = {"Rx": 0.0, "Ry": 0.0, "Rz": -1.0, "Px": 1.0, "Qx": 1.0, "Py": 1.0, "Qy": 1.0}


def principal_matrices():
    """``A^u, A^z, A^x, A^y`` for ``v = (R, P, Q)`` written as ``A^a v_a = 0``."""
    Au = np.diag([2.0, 0.0, 0.0])
    Az = np.diag([-1.0, 1.0, 1.0])
    Ax = np.zeros((3, 3))
    Ax[0, 1] = Ax[1, 0] = -1.0
    Ay = np.zeros((3, 3))
    Ay[0, 2] = Ay[2, 0] = -1.0
    return Au, Az, Ax, Ay


def _check_plane(grid):
    if grid.geometry != "nullplane":
        raise GridError(f"expected a nullplane grid, got {grid.geometry}")


@dataclass
class PlaneCharData:
    """Free data: ``R`` on ``u = 0`` and ``P, Q, psi`` on ``z = 0``.

    The ``z = 0`` arrays are sampled at half marching steps (shape
    ``grid.stage_shape``) so that intermediate Runge-Kutta stages see exact
    boundary values.
    """

    grid: GridSpec
    R_on_u0: np.ndarray
    P_on_z0: np.ndarray
    Q_on_z0: np.ndarray
    psi_on_z0: np.ndarray

    def __post_init__(self):
        _check_plane(self.grid)
        self.R_on_u0 = _as_shape(self.R_on_u0, self.grid.slice_shape, "R_on_u0")
        for name in ("P_on_z0", "Q_on_z0", "psi_on_z0"):
            setattr(self, name, _as_shape(getattr(self, name), self.grid.stage_shape, name))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.slice_shape), *(np.zeros(grid.stage_shape) for _ in range(3)))

    @classmethod
    def from_functions(cls, grid, R0, P0, Q0, psi0=None):
        """Sample callables ``R0(z, x, y)`` and ``P0(u, x, y)`` etc. on the grid."""
        z, x, y = grid.mesh()
        u = grid.march_coords(half=True)[:, None, None]
        shape = grid.stage_shape
        psi = np.zeros(shape) if psi0 is None else np.broadcast_to(psi0(u, x, y), shape)
        return cls(
            grid,
            np.broadcast_to(R0(z, x, y), grid.slice_shape),
            np.broadcast_to(P0(u, x, y), shape),
            np.broadcast_to(Q0(u, x, y), shape),
            psi,
        )

    def __add__(self, other):
        return PlaneCharData(self.grid, self.R_on_u0 + other.R_on_u0, self.P_on_z0 + other.P_on_z0,
                             self.Q_on_z0 + other.Q_on_z0, self.psi_on_z0 + other.psi_on_z0)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, a):
        return PlaneCharData(self.grid, a * self.R_on_u0, a * self.P_on_z0, a * self.Q_on_z0,
                             a * self.psi_on_z0)


def _as_shape(a, shape, name):
    a = np.array(a, dtype=float)
    if a.shape != shape:
        raise GridError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise GridError(f"{name} contains non-finite values")
    return a


@dataclass
class PlaneCharState:
    """Fields on the slice ``u = n * du``."""

    step: int
    R: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    psi: np.ndarray

    def u(self, grid):
        return self.step * grid.march_step


# -- operations ----------------------------------------------------------------


def plane_hypersurface_solve(grid, R, boundary):
    """Integrate ``P_z = R_x``, ``Q_z = R_y``, ``psi_z = R`` from ``z = 0``.

    ``boundary`` is ``(P0, Q0, psi0)``, each a transverse plane.
    """
    _check_plane(grid)
    R = np.asarray(R, dtype=float)
    if R.shape != grid.slice_shape:
        raise GridError(f"R has shape {R.shape}, expected {grid.slice_shape}")
    P0, Q0, psi0 = boundary
    dz, dx, dy = grid.spacing
    p = grid.scheme_order
    P = march_ode(diff_periodic(R, dx, 1, p), P0, dz, order=p)
    Q = march_ode(diff_periodic(R, dy, 2, p), Q0, dz, order=p)
    psi = march_ode(R, psi0, dz, order=p)
    return P, Q, psi


def plane_rhs(grid, R, P, Q):
    """``R_u = (P_x + Q_y + R_z) / 2`` on one slice."""
    dz, dx, dy = grid.spacing
    p = grid.scheme_order
    return 0.5 * (diff_periodic(P, dx, 1, p) + diff_periodic(Q, dy, 2, p) + diff_bounded(R, dz, 0, p))


def _boundary_fn(data):
    def boundary(k):
        return (data.P_on_z0[k], data.Q_on_z0[k], data.psi_on_z0[k])
    return boundary


def _solver(grid):
    def solve(y, bnd, u):
        return np.stack(plane_hypersurface_solve(grid, y[0], bnd))

    def rhs(y, null, u):
        return plane_rhs(grid, y[0], null[0], null[1])[None]

    return solve, rhs


def plane_advance_R(grid, state: PlaneCharState, data: PlaneCharData):
    """One Runge-Kutta step of ``R`` from ``state.step`` to ``state.step + 1``."""
    _check_plane(grid)
    if state.step >= grid.n_march:
        raise GridError("cannot step beyond u = T")
    solve, rhs = _solver(grid)
    boundary = _boundary_fn(data)

    def f(y, u, half=0):
        return rhs(y, solve(y, boundary(2 * state.step + half), u), u)

    u = state.u(grid)
    return _march._rk_step(f, state.R[None], u, grid.march_step, grid.scheme_order)[0]


def plane_state(grid, data, R, step):
    """Assemble the full state on a slice from ``R`` and the boundary data."""
    P, Q, psi = plane_hypersurface_solve(grid, R, _boundary_fn(data)(2 * step))
    return PlaneCharState(step, R, P, Q, psi)


def plane_evolve(data: PlaneCharData, grid: GridSpec = None, snapshots=()):
    """March the null-plane problem from ``u = 0`` to ``u = T``."""
    grid = data.grid if grid is None else grid
    _check_plane(grid)
    solve, rhs = _solver(grid)
    return _march.march(grid, data.R_on_u0[None], _boundary_fn(data), solve, rhs, NORMAL, NULL,
                        snapshots=snapshots)


# -- derivative system -----------------------------------------------------------


@dataclass
class PlaneDerivData:
    """Data for ``w``: ``(R_x, R_y, R_z)`` on ``u = 0``; ``(P_x, Q_x, P_y, Q_y)``,
    ``P_u`` and ``Q_u`` on ``z = 0`` (the latter three at half steps)."""

    grid: GridSpec
    normal0: np.ndarray  # (3,) + slice shape
    null_on_z0: np.ndarray  # (4,) + stage shape
    Pu_on_z0: np.ndarray
    Qu_on_z0: np.ndarray

    @classmethod
    def from_char_data(cls, data: PlaneCharData):
        """Differentiate the free data; no new free functions are introduced."""
        grid = data.grid
        dz, dx, dy = grid.spacing
        p = grid.scheme_order
        R0 = data.R_on_u0
        normal0 = np.stack([diff_periodic(R0, dx, 1, p), diff_periodic(R0, dy, 2, p),
                            diff_bounded(R0, dz, 0, p)])
        P0, Q0 = data.P_on_z0, data.Q_on_z0
        null = np.stack([diff_periodic(P0, dx, 1, p), diff_periodic(Q0, dx, 1, p),
                         diff_periodic(P0, dy, 2, p), diff_periodic(Q0, dy, 2, p)])
        half = 0.5 * grid.march_step
        return cls(grid, normal0, null, diff_bounded(P0, half, 0, p), diff_bounded(Q0, half, 0, p))

    @classmethod
    def from_functions(cls, grid, normal_fns, null_fns, Pu_fn, Qu_fn):
        z, x, y = grid.mesh()
        u = grid.march_coords(half=True)[:, None, None]
        normal0 = np.stack([np.broadcast_to(f(z, x, y), grid.slice_shape) for f in normal_fns])
        null = np.stack([np.broadcast_to(f(u, x, y), grid.stage_shape) for f in null_fns])
        return cls(grid, normal0, null, np.broadcast_to(Pu_fn(u, x, y), grid.stage_shape).copy(),
                   np.broadcast_to(Qu_fn(u, x, y), grid.stage_shape).copy())


def plane_deriv_rhs(grid, w_normal, w_null):
    Rx, Ry, Rz = w_normal
    Px, Qx, Py, Qy = w_null
    dz, dx, dy = grid.spacing
    p = grid.scheme_order

    def dX(a):
        return diff_periodic(a, dx, 1, p)

    def dY(a):
        return diff_periodic(a, dy, 2, p)

    return 0.5 * np.stack([
        dX(Px) + dY(Qx) + dX(Rz),
        dX(Py) + dY(Qy) + dY(Rz),
        dX(Rx) + dY(Ry) + diff_bounded(Rz, dz, 0, p),
    ])


def plane_deriv_null_solve(grid, w_normal, boundary):
    Rx, Ry, _ = w_normal
    dz, dx, dy = grid.spacing
    p = grid.scheme_order
    sources = (diff_periodic(Rx, dx, 1, p), diff_periodic(Rx, dy, 2, p),
               diff_periodic(Ry, dx, 1, p), diff_periodic(Ry, dy, 2, p))
    return np.stack([march_ode(src, b, dz, order=p) for src, b in zip(sources, boundary)])


def plane_derivative_evolve(ddata: PlaneDerivData, snapshots=()):
    """March the seven-variable derivative system."""
    grid = ddata.grid
    _check_plane(grid)
    return _march.march(
        grid, ddata.normal0, lambda k: ddata.null_on_z0[:, k],
        lambda y, b, u: plane_deriv_null_solve(grid, y, b),
        lambda y, nl, u: plane_deriv_rhs(grid, y, nl),
        DERIV_NORMAL, DERIV_NULL, snapshots=snapshots,
    )


def plane_reconstruct_PuQu(grid, Px, Qy, Rz, Pu0, Qu0):
    """``P_u``, ``Q_u`` on a slice by quadrature in ``z`` then a transverse derivative."""
    dz, dx, dy = grid.spacing
    p = grid.scheme_order
    running = march_ode(Px + Qy + Rz, np.zeros_like(Pu0), dz, order=p)
    Pu = Pu0[None] + 0.5 * diff_periodic(running, dx, 1, p)
    Qu = Qu0[None] + 0.5 * diff_periodic(running, dy, 2, p)
    return Pu, Qu


def plane_PuQu_from_run(run, ddata: PlaneDerivData, step):
    """Reconstruct ``P_u``, ``Q_u`` from a derivative-run snapshot at ``step``."""
    snap = run.snapshots[step]
    k = 2 * step
    return plane_reconstruct_PuQu(run.grid, snap["Px"], snap["Qy"], snap["Rz"],
                                  ddata.Pu_on_z0[k], ddata.Qu_on_z0[k])


def differentiate_plane_slice(grid, fields):
    """The seven derivative variables computed by differencing a main-run slice."""
    dz, dx, dy = grid.spacing
    p = grid.scheme_order
    R, P, Q = fields["R"], fields["P"], fields["Q"]
    return {
        "Rx": diff_periodic(R, dx, 1, p), "Ry": diff_periodic(R, dy, 2, p),
        "Rz": diff_bounded(R, dz, 0, p),
        "Px": diff_periodic(P, dx, 1, p), "Qx": diff_periodic(Q, dx, 1, p),
        "Py": diff_periodic(P, dy, 2, p), "Qy": diff_periodic(Q, dy, 2, p),
    }
