"""Position density, current density and boundary-current recording."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import DetectorRegion, Grid1D, WaveField

__all__ = [
    "RealField",
    "BoundaryRecord",
    "BoundaryRecorder",
    "probability_density",
    "current_density",
    "current_at",
    "interval_probability",
    "record_boundary_currents",
]


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid1D
    time: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class BoundaryRecord:
    """Current samples j(t_k, a) and j(t_k, b) for a detector."""

    detector: DetectorRegion
    times: np.ndarray
    j_a: np.ndarray
    j_b: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        j_a = np.array(self.j_a, dtype=float)
        j_b = np.array(self.j_b, dtype=float)
        if not (times.shape == j_a.shape == j_b.shape) or times.ndim != 1:
            raise ValueError("times, j_a and j_b must be 1-D and of equal length")
        if times.size == 0 or times[0] != 0.0:
            raise ValueError("boundary record must start at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        for name, arr in (("times", times), ("j_a", j_a), ("j_b", j_b)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def probability_density(f: WaveField) -> RealField:
    v = f.values
    return RealField(f.grid, f.time, v.real**2 + v.imag**2)


def _derivative(psi: np.ndarray, dx: float) -> np.ndarray:
    # central differences inside, second-order one-sided at the two edges
    d = np.empty_like(psi)
    d[1:-1] = (psi[2:] - psi[:-2]) / (2.0 * dx)
    d[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dx)
    d[-1] = (3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * dx)
    return d


def current_density(f: WaveField) -> RealField:
    """j = Im(conj(psi) * dpsi/dx) with second-order finite differences."""
    psi = f.values
    return RealField(f.grid, f.time, (np.conj(psi) * _derivative(psi, f.grid.dx)).imag)


def _node_current(psi: np.ndarray, k: int, dx: float) -> float:
    n = psi.shape[0]
    if k == 0:
        d = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dx)
    elif k == n - 1:
        d = (3.0 * psi[-1] - 4.0 * psi[-2] + psi[-3]) / (2.0 * dx)
    else:
        d = (psi[k + 1] - psi[k - 1]) / (2.0 * dx)
    return float((psi[k].conjugate() * d).imag)


def _locate(grid: Grid1D, x: float) -> tuple[int, float]:
    if not grid.contains(x):
        raise ValueError(f"position {x} outside grid [{grid.x_min}, {grid.x_max}]")
    u = (x - grid.x_min) / grid.dx
    k = min(int(np.floor(u)), grid.n_points - 2)
    return k, u - k


def current_at(f: WaveField, x: float) -> float:
    """Current at ``x``, linearly interpolated from the two neighbouring nodes.

    Uses the same stencil as :func:`current_density` but touches only four
    nodes, so it is cheap enough to call every time step.
    """
    k, w = _locate(f.grid, x)
    j0 = _node_current(f.values, k, f.grid.dx)
    if w == 0.0:
        return j0
    j1 = _node_current(f.values, k + 1, f.grid.dx)
    return (1.0 - w) * j0 + w * j1


def _interp(values: np.ndarray, grid: Grid1D, x: float) -> float:
    k, w = _locate(grid, x)
    return (1.0 - w) * values[k] + w * values[k + 1]


def interval_probability(f: WaveField, a: float, b: float) -> float:
    """Trapezoid integral of the density over ``[a, b]``.

    Endpoints that fall between nodes get a linearly interpolated density.
    """
    if a > b:
        raise ValueError(f"need a <= b, got [{a}, {b}]")
    grid = f.grid
    rho = probability_density(f).values
    ra, rb = _interp(rho, grid, a), _interp(rho, grid, b)
    if a == b:
        return 0.0
    x = grid.x
    inner = np.flatnonzero((x > a) & (x < b))
    xs = np.concatenate(([a], x[inner], [b]))
    ys = np.concatenate(([ra], rho[inner], [rb]))
    return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))


class BoundaryRecorder:
    """Propagation recorder collecting j at both detector edges every step."""

    def __init__(self, detector: DetectorRegion):
        self.detector = detector
        self._t: list[float] = []
        self._ja: list[float] = []
        self._jb: list[float] = []

    def __call__(self, step: int, time: float, field: WaveField) -> None:
        ja = current_at(field, self.detector.a)
        jb = ja if self.detector.is_point else current_at(field, self.detector.b)
        self._t.append(time)
        self._ja.append(ja)
        self._jb.append(jb)

    def record(self) -> BoundaryRecord:
        return BoundaryRecord(self.detector, np.array(self._t), np.array(self._ja), np.array(self._jb))


def record_boundary_currents(detector: DetectorRegion, grid: Grid1D | None = None) -> BoundaryRecorder:
    """Recorder for ``detector``; checks the edges against ``grid`` when given."""
    if grid is not None:
        for x in (detector.a, detector.b):
            if not grid.contains(x):
                raise ValueError(f"detector edge {x} outside grid")
    return BoundaryRecorder(detector)
