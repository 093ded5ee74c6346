"""Bohmian trajectory Monte-Carlo: an independent check on boundary-current arrival statistics.

Trajectories follow dx/dt = j/rho through stored density and current
snapshots.  Start points are drawn from the initial density, every path is
scanned for its first entry into the detector, and the empirical distribution
of entry times is compared with the trajectory-free result.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .domain import DetectorRegion, Grid1D, WaveField
from .observables import RealField, current_density, probability_density

__all__ = [
    "SingularVelocityError",
    "FieldHistory",
    "FieldHistoryRecorder",
    "Trajectory",
    "EnsembleResult",
    "velocity",
    "sample_initial_positions",
    "positions_from_quantiles",
    "integrate_trajectory",
    "integrate_paths",
    "first_entry_time",
    "first_entry_times",
    "empirical_detection_cdf",
    "run_ensemble",
    "compare_cdfs",
]

log = logging.getLogger(__name__)

RHO_FLOOR = 1e-12
ABORT_WARN_FRACTION = 1e-3


class SingularVelocityError(ArithmeticError):
    """Density at or below the floor: the velocity field j/rho is not usable there."""


@dataclass(frozen=True, eq=False)
class FieldHistory:
    """Density and current snapshots at uniformly spaced times.

    Values between snapshots are obtained by linear interpolation in time and
    space of rho and j separately.
    """

    grid: Grid1D
    times: np.ndarray
    rho: np.ndarray
    cur: np.ndarray
    stride: int = 1

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two snapshots")
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("snapshots must be uniformly spaced in time")
        shape = (times.size, self.grid.n_points)
        rho = np.ascontiguousarray(self.rho, dtype=np.float64)
        cur = np.ascontiguousarray(self.cur, dtype=np.float64)
        if rho.shape != shape or cur.shape != shape:
            raise ValueError(f"snapshot arrays must have shape {shape}")
        # read-only views; the snapshot arrays are too large to copy
        for name, arr in (("times", times.view()), ("rho", rho.view()), ("cur", cur.view())):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def snap_dt(self) -> float:
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def kernel_args(self):
        g = self.grid
        return self.rho, self.cur, float(self.times[0]), self.snap_dt, g.x_min, g.dx


class FieldHistoryRecorder:
    """Propagation recorder storing rho and j every ``stride`` steps."""

    def __init__(self, stride: int = 1):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.stride = int(stride)
        self._grid: Grid1D | None = None
        self._t: list[float] = []
        self._rho: list[np.ndarray] = []
        self._cur: list[np.ndarray] = []

    def __call__(self, step: int, time: float, f: WaveField) -> None:
        if step % self.stride:
            return
        self._grid = f.grid
        self._t.append(time)
        self._rho.append(probability_density(f).values)
        self._cur.append(current_density(f).values)

    def history(self) -> FieldHistory:
        if self._grid is None:
            raise ValueError("no snapshots recorded")
        return FieldHistory(
            self._grid, np.array(self._t), np.array(self._rho), np.array(self._cur), self.stride
        )


def velocity(t: float, x: float, h: FieldHistory, rho_floor: float = RHO_FLOOR) -> float:
    """Bohmian velocity j/rho at ``(t, x)`` from bilinear interpolation of the snapshots."""
    g = h.grid
    if not g.contains(x):
        raise ValueError(f"x = {x} outside the grid")
    v, status = kernels._pykernels._velocity(
        h.rho, h.cur, float(h.times[0]), h.snap_dt, g.x_min, g.dx, rho_floor,
        np.array([float(t)]), np.array([float(x)]),
    )
    if status[0] == kernels.ABORTED:
        raise SingularVelocityError(f"density below {rho_floor:g} at t={t}, x={x}")
    return float(v[0])


def positions_from_quantiles(rho0: RealField, u) -> np.ndarray:
    """Invert the piecewise-linear cumulative distribution of ``rho0`` at quantiles ``u``."""
    x = rho0.grid.x
    rho = rho0.values
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))))
    total = cdf[-1]
    if not abs(total - 1.0) < 1e-6:
        raise ValueError(f"density integrates to {total:.9f}, expected 1")
    cdf /= total
    # drop flat stretches so the inverse is single-valued
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    return np.interp(np.asarray(u, dtype=float), cdf[keep], x[keep])


def sample_initial_positions(rho0: RealField, count: int, seed: int) -> np.ndarray:
    """Inverse-transform samples from ``rho0``; deterministic for a fixed seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return positions_from_quantiles(rho0, rng.random(count))


@dataclass(frozen=True, eq=False)
class Trajectory:
    x0: float
    times: np.ndarray
    x: np.ndarray
    status: str  # "completed" or "aborted-near-node"
    exited: bool = False


_STATUS = {kernels.COMPLETED: "completed", kernels.ABORTED: "aborted-near-node",
           kernels.EXITED: "completed"}


def _output_times(h: FieldHistory, t_end: float | None) -> np.ndarray:
    t_end = h.t_end if t_end is None else float(t_end)
    if t_end > h.t_end * (1 + 1e-12):
        raise ValueError(f"t_end = {t_end} beyond the recorded window {h.t_end}")
    t = h.times[h.times < t_end - 1e-12 * max(1.0, abs(t_end))]
    return np.append(t, t_end)


def integrate_paths(x0s, h: FieldHistory, t_end: float | None = None, rtol: float = 1e-6,
                    atol: float = 1e-9, rho_floor: float = RHO_FLOOR, backend=None):
    """Integrate many trajectories; returns ``(t_out, paths, status_codes, nfev)``."""
    impl = backend or kernels
    t_out = _output_times(h, t_end)
    x0s = np.atleast_1d(np.asarray(x0s, dtype=float))
    paths, status, nfev = impl.integrate_ensemble(
        *h.kernel_args(), x0s, t_out, rtol=rtol, atol=atol, rho_floor=rho_floor,
        h0=min(1e-3, t_out[-1] - t_out[0]) if t_out.size > 1 else 1e-3,
    )
    return t_out, paths, np.asarray(status), nfev


def integrate_trajectory(x0: float, h: FieldHistory, t_end: float | None = None,
                         rtol: float = 1e-6, atol: float = 1e-9,
                         rho_floor: float = RHO_FLOOR) -> Trajectory:
    """Integrate one trajectory with an adaptive Dormand-Prince 5(4) pair.

    Samples are taken at the snapshot times (plus ``t_end``).  A trajectory
    that meets a density node is returned with status ``aborted-near-node``;
    one leaving the grid is ``completed`` with ``exited=True`` and NaN
    positions after the exit.
    """
    if not h.grid.contains(x0):
        raise ValueError(f"x0 = {x0} outside the grid")
    t_out, paths, status, _ = integrate_paths([x0], h, t_end, rtol, atol, rho_floor)
    code = int(status[0])
    return Trajectory(float(x0), t_out, paths[0], _STATUS[code], code == kernels.EXITED)


def first_entry_times(t, paths, a: float, b: float) -> np.ndarray:
    """First time each path touches ``[a, b]``; NaN when it never does.

    Paths starting inside enter at ``t[0]``.  Crossings between samples are
    located by linear interpolation of the path.
    """
    t = np.asarray(t, dtype=float)
    x = np.atleast_2d(np.asarray(paths, dtype=float))
    out = np.full(x.shape[0], np.nan)
    inside0 = (x[:, 0] >= a) & (x[:, 0] <= b)
    out[inside0] = t[0]
    x0, x1 = x[:, :-1], x[:, 1:]
    with np.errstate(invalid="ignore"):
        touch = (np.minimum(x0, x1) <= b) & (np.maximum(x0, x1) >= a)
    has = touch.any(axis=1) & ~inside0
    rows = np.flatnonzero(has)
    k = np.argmax(touch[rows], axis=1)
    xa, xb = x0[rows, k], x1[rows, k]
    edge = np.where(xa < a, a, b)
    dx = xb - xa
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(dx != 0, (edge - xa) / dx, 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    out[rows] = t[k] + frac * (t[k + 1] - t[k])
    return out


def first_entry_time(traj: Trajectory, det: DetectorRegion) -> float | None:
    te = first_entry_times(traj.times, traj.x[None, :], det.a, det.b)[0]
    return None if math.isnan(te) else float(te)


def empirical_detection_cdf(entry_times, eval_times, count: int | None = None):
    """Fraction of entry times ``<= tau`` and its binomial standard error.

    ``entry_times`` uses NaN (or None) for trajectories that never entered.
    """
    te = np.array([np.nan if e is None else e for e in np.atleast_1d(entry_times)], dtype=float)
    count = te.size if count is None else int(count)
    if count < 1:
        raise ValueError("need at least one sample")
    finite = np.sort(te[np.isfinite(te)])
    ev = np.asarray(eval_times, dtype=float)
    p = np.searchsorted(finite, ev, side="right") / count
    return p, np.sqrt(p * (1.0 - p) / count)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    x0: np.ndarray
    times: np.ndarray
    paths: np.ndarray
    status: np.ndarray
    entry_times: np.ndarray
    seed: int
    detector: DetectorRegion
    nfev: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return self.status != kernels.ABORTED

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.valid))

    @property
    def n_aborted(self) -> int:
        return int(self.status.size - self.count)

    @property
    def n_exited(self) -> int:
        return int(np.count_nonzero(self.status == kernels.EXITED))

    def cdf(self, eval_times):
        return empirical_detection_cdf(self.entry_times[self.valid], eval_times)


def run_ensemble(h: FieldHistory, rho0: RealField, detector: DetectorRegion, count: int,
                 seed: int, rtol: float = 1e-6, atol: float = 1e-9,
                 rho_floor: float = RHO_FLOOR, backend=None) -> EnsembleResult:
    """Sample, integrate and scan ``count`` trajectories for first detector entries."""
    x0 = sample_initial_positions(rho0, count, seed)
    t_out, paths, status, nfev = integrate_paths(x0, h, None, rtol, atol, rho_floor, backend)
    entries = first_entry_times(t_out, paths, detector.a, detector.b)
    result = EnsembleResult(x0, t_out, paths, status.astype(np.int8), entries, int(seed),
                            detector, nfev)
    if result.n_aborted > ABORT_WARN_FRACTION * count:
        warnings.warn(
            f"{result.n_aborted} of {count} trajectories aborted near density nodes "
            "and were excluded",
            RuntimeWarning,
            stacklevel=2,
        )
    log.info("ensemble: %d trajectories, %d aborted, %d exited, %d velocity evaluations",
             count, result.n_aborted, result.n_exited, nfev)
    return result


def compare_cdfs(times, P, eval_times, P_hat, count: int, n_sigma: float = 3.0) -> dict:
    """Check ``|P - P_hat| <= n_sigma * sqrt(P(1-P)/count)`` at every evaluation time."""
    ev = np.asarray(eval_times, dtype=float)
    P_at = np.interp(ev, np.asarray(times, float), np.asarray(P, float))
    P_hat = np.asarray(P_hat, dtype=float)
    sigma = np.sqrt(np.clip(P_at * (1.0 - P_at), 0.0, None) / count)
    diff = np.abs(P_at - P_hat)
    bound = n_sigma * sigma
    ok = diff <= bound
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(diff > 0, diff / sigma, 0.0)
    return {
        "eval_times": ev.tolist(),
        "P": P_at.tolist(),
        "P_hat": P_hat.tolist(),
        "bound": bound.tolist(),
        "max_abs_diff": float(diff.max()) if diff.size else 0.0,
        "max_sigma_ratio": float(ratio.max()) if ratio.size else 0.0,
        "n_eval": int(ev.size),
        "n_failed": int(np.count_nonzero(~ok)),
        "samples": int(count),
        "passed": bool(ok.all()),
    }
