"""Crank-Nicolson time evolution with hard walls at the grid edges."""

from __future__ import annotations

import math
from typing import Callable, Iterable, Protocol

import numpy as np

from .domain import Grid1D, PotentialSpec, TimeGrid, WaveField
from .kernels import CrankNicolsonStepper

__all__ = [
    "NormDriftError",
    "PropagationRecorder",
    "evaluate_potential",
    "potential_on_grid",
    "default_dt",
    "propagate",
    "DT_OVER_DX2",
]

#: default ratio dt / dx**2
DT_OVER_DX2 = 0.5


class NormDriftError(RuntimeError):
    """Discrete norm moved by more than the allowed drift during propagation."""


class PropagationRecorder(Protocol):
    def __call__(self, step: int, time: float, field: WaveField) -> None: ...


def evaluate_potential(spec: PotentialSpec, x):
    """Potential at ``x`` (scalar or array). Step functions use Theta(0) = 1."""
    x = np.asarray(x, dtype=float)
    if spec.kind == "free":
        v = np.zeros_like(x)
    elif spec.kind == "barrier":
        v = spec.height * ((x >= spec.a).astype(float) - (x >= spec.b).astype(float))
    elif spec.kind == "step":
        v = spec.height * (x >= spec.x_s).astype(float)
    else:
        raise ValueError("a tabulated potential has no pointwise form; use potential_on_grid")
    return float(v) if v.ndim == 0 else v


def potential_on_grid(spec: PotentialSpec, grid: Grid1D) -> np.ndarray:
    if spec.kind == "tabulated":
        values = np.asarray(spec.values, dtype=float)
        if values.shape != (grid.n_points,):
            raise ValueError(
                f"tabulated potential has {values.size} values for {grid.n_points} nodes"
            )
        return values
    return evaluate_potential(spec, grid.x)


def default_dt(grid: Grid1D, ratio: float = DT_OVER_DX2) -> float:
    return ratio * grid.dx**2


def _stepper(grid: Grid1D, v: np.ndarray, dt: float) -> CrankNicolsonStepper:
    # H = -1/2 d^2/dx^2 + V on a three-point stencil, zero beyond both edges
    inv_dx2 = 1.0 / grid.dx**2
    h_diag = inv_dx2 + v
    off = -0.25j * dt * inv_dx2
    return CrankNicolsonStepper(1.0 + 0.5j * dt * h_diag, 1.0 - 0.5j * dt * h_diag, off)


def propagate(
    initial: WaveField,
    spec: PotentialSpec,
    tg: TimeGrid,
    recorders: Iterable[Callable[[int, float, WaveField], None]] = (),
    max_drift: float = 1e-6,
    check_every: int = 1,
) -> WaveField:
    """Advance ``initial`` by ``tg.n_steps`` Crank-Nicolson steps.

    Every recorder is called as ``recorder(step, time, field)`` at every step,
    including step 0.  Fields handed to recorders are read-only.  A negative
    ``tg.dt`` is not allowed by :class:`TimeGrid`; for backward runs see
    :func:`propagate_signed`.

    Raises
    ------
    NormDriftError
        If the discrete norm drifts from its initial value by more than
        ``max_drift``.
    """
    return propagate_signed(initial, spec, tg.dt, tg.n_steps, recorders, max_drift, check_every)


def propagate_signed(
    initial: WaveField,
    spec: PotentialSpec,
    dt: float,
    n_steps: int,
    recorders: Iterable[Callable[[int, float, WaveField], None]] = (),
    max_drift: float = 1e-6,
    check_every: int = 1,
) -> WaveField:
    """As :func:`propagate` but ``dt`` may be negative (time-reversed run)."""
    recorders = list(recorders)
    grid = initial.grid
    step_fn = _stepper(grid, potential_on_grid(spec, grid), dt)
    norm0 = initial.norm()
    field = initial
    for rec in recorders:
        rec(0, field.time, field)
    psi = field.values
    t0 = initial.time
    for k in range(1, n_steps + 1):
        psi = step_fn(psi)
        psi.flags.writeable = False
        field = WaveField(grid, t0 + k * dt, psi)
        if k % check_every == 0 or k == n_steps:
            drift = abs(field.norm() - norm0)
            if not drift <= max_drift:
                raise NormDriftError(
                    f"norm drift {drift:.3e} at step {k} (t={field.time:.6g}) exceeds {max_drift:g}"
                )
        for rec in recorders:
            rec(k, field.time, field)
        psi = field.values
    return field


def steps_for(t_end: float, dt: float) -> int:
    """Number of steps of size ``dt`` covering ``[0, t_end]`` (rounded up)."""
    n = t_end / dt
    return int(math.ceil(n - 1e-9))
