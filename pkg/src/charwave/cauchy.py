"""First-order Cauchy problem for the wave equation on a periodic box.

With ``U = psi_t``, ``P = psi_x``, ``Q = psi_y``, ``R = psi_z``::

    U_t = P_x + Q_y + R_z,   P_t = U_x,   Q_t = U_y,   R_t = U_z,   psi_t = U

The centred periodic difference operators are skew-adjoint, so the
semi-discrete norm ``int U**2 + P**2 + Q**2 + R**2`` is conserved exactly and
the constraints ``P - D_x psi`` etc. are invariants of the discrete flow.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import FieldSlice, GridError, GridSpec, check_finite, diff_periodic

FIELDS = ("U", "P", "Q", "R")


def _check_cauchy(grid):
    if grid.geometry != "cartesian_cauchy":
        raise GridError(f"expected a cartesian_cauchy grid, got {grid.geometry}")


@dataclass
class CauchyState:
    """Fields on the periodic box at time ``t``; arrays use the ``(z, x, y)`` layout."""

    grid: GridSpec
    t: float
    U: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    psi: np.ndarray | None = None

    def __post_init__(self):
        _check_cauchy(self.grid)
        for name in FIELDS + (("psi",) if self.psi is not None else ()):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != self.grid.slice_shape:
                raise GridError(f"{name} has shape {a.shape}, expected {self.grid.slice_shape}")
            setattr(self, name, a)

    @classmethod
    def zeros(cls, grid, with_psi=True):
        z = np.zeros(grid.slice_shape)
        return cls(grid, 0.0, z, z.copy(), z.copy(), z.copy(), z.copy() if with_psi else None)

    @property
    def names(self):
        return FIELDS + (("psi",) if self.psi is not None else ())

    def field(self, name) -> FieldSlice:
        return FieldSlice(self.grid, self.t, getattr(self, name))

    def _combine(self, other, a, b):
        psi = None
        if self.psi is not None and other.psi is not None:
            psi = a * self.psi + b * other.psi
        return CauchyState(self.grid, self.t, *(a * getattr(self, n) + b * getattr(other, n)
                                                for n in FIELDS), psi)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __rmul__(self, a):
        return self._combine(self, float(a), 0.0)


def _d(grid, a, axis):
    i = grid.axes.index(axis)
    return diff_periodic(a, grid.spacing[i], i, grid.scheme_order)


def cauchy_rhs(state: CauchyState) -> CauchyState:
    """Time derivative of every evolved field."""
    grid = state.grid
    _check_cauchy(grid)
    U = state.U
    return CauchyState(
        grid, state.t,
        _d(grid, state.P, "x") + _d(grid, state.Q, "y") + _d(grid, state.R, "z"),
        _d(grid, U, "x"), _d(grid, U, "y"), _d(grid, U, "z"),
        U.copy() if state.psi is not None else None,
    )


def cauchy_step(state: CauchyState, dt: float) -> CauchyState:
    """One explicit Runge-Kutta step (midpoint for order 2, classical for order 4)."""
    grid = state.grid
    limit = grid.cfl_factor * grid.min_spacing
    if not 0 < dt <= limit * (1 + 1e-12):
        raise GridError(f"time step {dt:.6g} violates 0 < dt <= cfl_factor * h = {limit:.6g}")
    k1 = cauchy_rhs(state)
    if grid.scheme_order == 2:
        k2 = cauchy_rhs(state + (0.5 * dt) * k1)
        out = state + dt * k2
    else:
        k2 = cauchy_rhs(state + (0.5 * dt) * k1)
        k3 = cauchy_rhs(state + (0.5 * dt) * k2)
        k4 = cauchy_rhs(state + dt * k3)
        out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = replace(out, t=state.t + dt)
    for name in out.names:
        check_finite(getattr(out, name), name)
    return out


def cauchy_norm(state: CauchyState) -> float:
    """``int (U**2 + P**2 + Q**2 + R**2) d^3x``; ``psi`` is not included."""
    dv = float(np.prod(state.grid.spacing))
    return dv * float(sum(np.sum(getattr(state, n) ** 2) for n in FIELDS))


def constraint_residual(state: CauchyState):
    """L2 norms of ``P - psi_x``, ``Q - psi_y`` and ``R - psi_z``."""
    if state.psi is None:
        raise GridError("constraint residuals need psi in the state")
    grid = state.grid
    dv = float(np.prod(grid.spacing))
    out = []
    for name, axis in (("P", "x"), ("Q", "y"), ("R", "z")):
        c = getattr(state, name) - _d(grid, state.psi, axis)
        out.append(float(np.sqrt(dv * np.sum(c**2))))
    return tuple(out)


def differentiate_state(state: CauchyState, axis: str) -> CauchyState:
    """Apply the discrete ``d/d axis`` to every field."""
    return CauchyState(state.grid, state.t,
                       *(_d(state.grid, getattr(state, n), axis) for n in state.names))


@dataclass
class CauchyRun:
    """Final state plus the norm history and sampled constraint residuals."""

    final: CauchyState
    times: np.ndarray
    norms: np.ndarray
    constraints: np.ndarray | None
    psi_reconstructed: np.ndarray | None


def cauchy_evolve(state: CauchyState, T=None, constraint_every=0, reconstruct_psi=False) -> CauchyRun:
    """Evolve from ``state.t`` by ``T`` (default ``grid.T``) in ``grid.n_march`` equal steps.

    The norm is recorded every step.  Constraint residuals are recorded at the
    start and end, and every ``constraint_every`` steps if positive.  With
    ``reconstruct_psi`` the quadrature ``psi0 + int U dt`` (trapezoid for order
    2, Hermite-corrected trapezoid using ``U_t`` for order 4) is accumulated as
    an independent check on the evolved ``psi``.
    """
    grid = state.grid
    T = grid.T if T is None else T
    n = grid.n_march
    dt = T / n
    with_psi = state.psi is not None
    norms = [cauchy_norm(state)]
    cons = [constraint_residual(state)] if with_psi else None
    recon = state.psi.copy() if (with_psi and reconstruct_psi) else None

    def Ut(s):
        return _d(grid, s.P, "x") + _d(grid, s.Q, "y") + _d(grid, s.R, "z")

    Ut_prev = Ut(state) if (recon is not None and grid.scheme_order == 4) else None
    for i in range(n):
        nxt = cauchy_step(state, dt)
        if recon is not None:
            recon += 0.5 * dt * (state.U + nxt.U)
            if Ut_prev is not None:
                Ut_next = Ut(nxt)
                recon += dt**2 / 12.0 * (Ut_prev - Ut_next)
                Ut_prev = Ut_next
        state = nxt
        norms.append(cauchy_norm(state))
        if cons is not None and (i == n - 1 or (constraint_every and (i + 1) % constraint_every == 0)):
            cons.append(constraint_residual(state))
    times = np.linspace(0.0, T, n + 1) + (state.t - T)
    return CauchyRun(state, times, np.array(norms), None if cons is None else np.array(cons), recon)


# -- initial data ---------------------------------------------------------------------


def cauchy_from_psi(grid, psi0, psi_t0, gradient=None, t=0.0):
    """State from ``psi`` and ``psi_t`` samples (arrays or callables of ``(z, x, y)``).

    ``gradient`` supplies ``(psi_x, psi_y, psi_z)``; if omitted they are taken
    with the discrete operators, which makes the constraints vanish exactly.
    """
    _check_cauchy(grid)
    z, x, y = grid.mesh()

    def sample(f):
        a = f(z, x, y) if callable(f) else f
        return np.broadcast_to(np.asarray(a, dtype=float), grid.slice_shape).copy()

    psi = sample(psi0)
    U = sample(psi_t0)
    if gradient is None:
        P, Q, R = (_d(grid, psi, a) for a in ("x", "y", "z"))
    else:
        P, Q, R = (sample(g) for g in gradient)
    return CauchyState(grid, t, U, P, Q, R, psi)


@dataclass(frozen=True)
class TrigField:
    """Real trigonometric polynomial ``sum_k a_k cos(k.x) + b_k sin(k.x)`` on a box.

    Wavevectors are stored in ``(z, x, y)`` order in units of ``2 pi / L``.
    """

    modes: np.ndarray
    a: np.ndarray
    b: np.ndarray
    lengths: tuple

    def _phase(self, z, x, y):
        k = 2 * np.pi * self.modes / np.asarray(self.lengths)
        return [kk[0] * z + kk[1] * x + kk[2] * y for kk in k], k

    def __call__(self, z, x, y, deriv=None):
        """Value, or the derivative along axis index ``deriv`` (0=z, 1=x, 2=y)."""
        phases, k = self._phase(z, x, y)
        out = 0.0
        for ph, kk, a, b in zip(phases, k, self.a, self.b):
            if deriv is None:
                out = out + a * np.cos(ph) + b * np.sin(ph)
            else:
                out = out + kk[deriv] * (-a * np.sin(ph) + b * np.cos(ph))
        return out


def random_trig_field(rng, kmax, lengths, n_modes=None):
    """Band-limited field with integer wavevectors ``|k_i| <= kmax`` and coefficients in [-1, 1]."""
    grid_k = np.array([(i, j, l) for i in range(-kmax, kmax + 1) for j in range(-kmax, kmax + 1)
                       for l in range(-kmax, kmax + 1)])
    if n_modes is not None and n_modes < len(grid_k):
        grid_k = grid_k[rng.choice(len(grid_k), size=n_modes, replace=False)]
    a = rng.uniform(-1, 1, len(grid_k))
    b = rng.uniform(-1, 1, len(grid_k))
    return TrigField(grid_k, a, b, tuple(lengths))


def random_cauchy_state(grid, seed, kmax=2, n_modes=12):
    """Random band-limited ``psi`` and ``psi_t``; ``P, Q, R`` from the exact gradient."""
    _check_cauchy(grid)
    rng = np.random.default_rng(seed)
    lengths = (grid.z_extent,) + tuple(grid.periodic_lengths)
    psi = random_trig_field(rng, kmax, lengths, n_modes)
    psi_t = random_trig_field(rng, kmax, lengths, n_modes)
    grad = (lambda z, x, y: psi(z, x, y, 1), lambda z, x, y: psi(z, x, y, 2),
            lambda z, x, y: psi(z, x, y, 0))
    return cauchy_from_psi(grid, psi, psi_t, gradient=grad)
