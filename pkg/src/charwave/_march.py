"""Shared marching loop for characteristic problems in canonical form.

Normal variables are advanced from one characteristic slice to the next with
an explicit one-step method; null variables are recomputed on every slice
(and every stage) by integrating their intra-surface ODEs from the
transverse surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DiagonalRecord, GridSpec, check_finite, integrate_transverse, partial_integral


@dataclass
class CharRun:
    """Everything a characteristic run records for the estimate harness."""

    grid: GridSpec
    normal_names: tuple[str, ...]
    null_names: tuple[str, ...]
    diagonal: DiagonalRecord
    transverse: dict
    initial: dict
    source_series: np.ndarray | None = None
    snapshots: dict = field(default_factory=dict)
    source_max: float | None = None

    @property
    def names(self):
        return self.normal_names + self.null_names


def _rk_step(f, y, u, du, order):
    if order == 2:
        k1 = f(y, u)
        k2 = f(y + 0.5 * du * k1, u + 0.5 * du, half=1)
        return y + du * k2
    k1 = f(y, u)
    k2 = f(y + 0.5 * du * k1, u + 0.5 * du, half=1)
    k3 = f(y + 0.5 * du * k2, u + 0.5 * du, half=1)
    k4 = f(y + du * k3, u + du, half=2)
    return y + du / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def march(grid, normal0, boundary, solve_null, rhs, normal_names, null_names,
          source=None, snapshots=()):
    """Run the characteristic march from ``u = 0`` to ``u = T``.

    ``boundary(k)`` returns the stacked null-variable data on the transverse
    surface at half-step index ``k`` (``u = k * du / 2``).  ``solve_null``
    maps (normal stack, boundary planes, u) to the null stack; ``rhs`` maps
    (normal, null, u) to ``d normal / du``.  ``source``, if given, returns the
    pointwise volume-source density on a slice.
    """
    du = grid.march_step
    m = grid.steps_per_station
    n_rad = grid.n_radial
    order = grid.scheme_order
    names = tuple(normal_names) + tuple(null_names)
    record = DiagonalRecord(grid, names)
    transverse = {name: np.zeros(grid.surface_shape) for name in names}
    series = np.zeros(grid.n_march + 1) if source is not None else None
    peak = [-np.inf]
    snaps = {}
    keep = set(snapshots)
    y = np.array(normal0, dtype=float)
    check_finite(y, "normal data", step=0)
    state = {}

    def f(y_stage, u, half=0):
        k = 2 * state["n"] + half
        null = solve_null(y_stage, boundary(k), u)
        if half == 0:
            state["null"] = null
        return rhs(y_stage, null, u)

    def observe(n, y_n, null):
        check_finite(null, "null variables", step=n)
        planes = np.concatenate([y_n, null])
        for i, name in enumerate(names):
            transverse[name][n] = planes[i, 0]
        if n % m == 0:
            j = n_rad - n // m
            record.store(j, {name: planes[i, j] for i, name in enumerate(names)})
        if series is not None:
            pointwise = source(y_n, null)
            peak[0] = max(peak[0], float(pointwise.max()))
            dens = integrate_transverse(grid, pointwise)
            series[n] = partial_integral(dens, grid.spacing[0], grid.T - n * du, order)
        if n in keep:
            snaps[n] = {name: planes[i].copy() for i, name in enumerate(names)}

    initial = None
    for n in range(grid.n_march):
        state["n"] = n
        u = n * du
        y_next = _rk_step(f, y, u, du, order)
        null = state["null"]
        if n == 0:
            initial = {name: a.copy() for name, a in zip(names, np.concatenate([y, null]))}
        observe(n, y, null)
        check_finite(y_next, "normal variables", step=n + 1)
        y = y_next
    n = grid.n_march
    state["n"] = n
    null = solve_null(y, boundary(2 * n), grid.T)
    observe(n, y, null)
    return CharRun(grid, tuple(normal_names), tuple(null_names), record, transverse,
                   initial, series, snaps, peak[0] if source is not None else None)
