"""Detection probability and arrival-time statistics from boundary currents.

For a detector occupying ``[a, b]`` from ``t = 0`` on, the probability that a
Bohmian particle has entered it by time ``tau`` is::

    P(tau) = P(0) + max_{s<=tau} f_a(s) + max_{s<=tau} (-f_b(s))

where ``f_a``, ``f_b`` are the time integrals of the current at the two edges.
No trajectories are required.  A point detector is the case ``b == a`` with
``P(0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .observables import BoundaryRecord

__all__ = [
    "ArrivalError",
    "ZeroDetectionError",
    "ProbabilityOvershootError",
    "QuadratureError",
    "CumulativeSeries",
    "ArrivalMoments",
    "ArrivalResult",
    "cumulative_current",
    "running_max",
    "detection_probability",
    "point_detection_probability",
    "conditionalize",
    "arrival_density",
    "arrival_moments",
    "cut_off_integral",
    "analyze",
]

OVERSHOOT_TOL = 1e-6
THETA_RTOL = 1e-12


class ArrivalError(ValueError):
    pass


class ZeroDetectionError(ArrivalError):
    """N = 0: the conditional distribution is undefined."""


class ProbabilityOvershootError(ArrivalError):
    """P exceeded one beyond tolerance, which points at an upstream discretization error."""


class QuadratureError(ArrivalError):
    pass


@dataclass(frozen=True, eq=False)
class CumulativeSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ArrivalError("times and values must be 1-D and of equal length")
        if values.size and values[0] != 0.0:
            raise ArrivalError("a cumulative series starts at 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


def _check_times(times: np.ndarray) -> None:
    if times.ndim != 1 or times.size == 0:
        raise ArrivalError("need a non-empty 1-D time axis")
    if times[0] != 0.0:
        raise ArrivalError("time axis must start at 0 (detector activation)")
    if np.any(np.diff(times) <= 0):
        raise ArrivalError("time axis must be strictly increasing")


def cumulative_current(times, j_series) -> CumulativeSeries:
    """Trapezoid antiderivative of ``j_series`` with value 0 at t = 0."""
    times = np.asarray(times, dtype=float)
    j = np.asarray(j_series, dtype=float)
    if times.shape != j.shape:
        raise ArrivalError(f"length mismatch: {times.shape} times vs {j.shape} currents")
    _check_times(times)
    f = np.zeros_like(j)
    f[1:] = np.cumsum(0.5 * (j[1:] + j[:-1]) * np.diff(times))
    return CumulativeSeries(times, f)


def running_max(series) -> np.ndarray:
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ArrivalError("running max of an empty series")
    return np.maximum.accumulate(s)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, CumulativeSeries) else np.asarray(f, dtype=float)


def detection_probability(f_a, f_b, P0: float) -> np.ndarray:
    """``P0 + runmax(f_a) + runmax(-f_b)``; never clipped.

    Raises
    ------
    ProbabilityOvershootError
        If any value exceeds ``1 + 1e-6``.
    """
    if isinstance(f_a, CumulativeSeries) and isinstance(f_b, CumulativeSeries):
        if not np.array_equal(f_a.times, f_b.times):
            raise ArrivalError("f_a and f_b are on different time axes")
    fa, fb = _values(f_a), _values(f_b)
    if fa.shape != fb.shape:
        raise ArrivalError("f_a and f_b have different lengths")
    if not 0.0 <= P0 <= 1.0:
        raise ArrivalError(f"P(0) = {P0} is not a probability")
    P = P0 + running_max(fa) + running_max(-fb)
    peak = float(P.max())
    if peak > 1.0 + OVERSHOOT_TOL:
        raise ProbabilityOvershootError(
            f"P reaches {peak:.9f} > 1; boundary currents are inconsistent with a normalized state"
        )
    return P


def point_detection_probability(f_a) -> np.ndarray:
    return detection_probability(f_a, f_a, 0.0)


def conditionalize(P, times=None, tail_fraction: float = 0.1, tail_tol: float = 1e-3):
    """Overall detection probability N and the conditional distribution P / N.

    N is the last value of ``P``.  It is accepted as the long-time limit only
    if ``P`` grew by less than ``tail_tol`` over the final ``tail_fraction`` of
    the time axis.

    Returns
    -------
    (N, Pc, converged)
    """
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        raise ArrivalError("empty detection series")
    if np.any(np.diff(P) < 0):
        raise ArrivalError("detection probability must be non-decreasing")
    N = float(P[-1])
    if not N > 0.0:
        raise ZeroDetectionError("zero detection probability: the conditional distribution is undefined")
    if times is None:
        times = np.arange(P.size, dtype=float)
    times = np.asarray(times, dtype=float)
    t_cut = times[-1] - tail_fraction * (times[-1] - times[0])
    start = int(np.searchsorted(times, t_cut, side="left"))
    converged = bool(N - P[min(start, P.size - 1)] < tail_tol)
    return N, P / N, converged


def _theta_active(f: np.ndarray) -> np.ndarray:
    """Theta(f(tau) - max_{s<=tau} f(s)) with Theta(0) = 1 and a relative equality tolerance."""
    m = running_max(f)
    scale = max(float(np.max(np.abs(f))), np.finfo(float).tiny)
    return f >= m - THETA_RTOL * scale


def arrival_density(j_a, j_b, f_a, f_b, N: float) -> np.ndarray:
    """Density of first arrivals on ``tau > 0`` (the cut-off current over N).

    For a point detector pass the same series for both edges.  Edge terms are
    non-negative by construction; sampling can leave a slightly negative
    current at the instant a running maximum is attained, and such values are
    set to zero.
    """
    if not N > 0:
        raise ArrivalError(f"N must be positive, got {N}")
    ja, jb = np.asarray(j_a, dtype=float), np.asarray(j_b, dtype=float)
    fa, fb = _values(f_a), _values(f_b)
    if not (ja.shape == jb.shape == fa.shape == fb.shape):
        raise ArrivalError("misaligned series")
    term_a = np.where(_theta_active(fa), ja, 0.0)
    term_b = np.where(_theta_active(-fb), -jb, 0.0)
    return (np.maximum(term_a, 0.0) + np.maximum(term_b, 0.0)) / N


def _edge_cut_off(times, j, f) -> np.ndarray:
    """Cumulative integral of ``max(j,0) * Theta(f - runmax f)``.

    The step factor jumps inside time intervals, so the integrand is treated
    as the linear interpolant of ``j`` restricted to the active part of each
    interval; switch points are located by linear interpolation.
    """
    h = np.diff(times)
    active = _theta_active(f)
    m_prev = running_max(f)[:-1]
    j0, j1 = j[:-1], j[1:]
    a0, a1 = active[:-1], active[1:]
    out = np.where(a0 & a1, 0.5 * (np.maximum(j0, 0.0) + np.maximum(j1, 0.0)) * h, 0.0)

    # regain: f climbs back to its previous maximum inside the interval
    up = ~a0 & a1
    g0, g1 = f[:-1][up] - m_prev[up], f[1:][up] - m_prev[up]
    s = np.clip(-g0 / np.where(g1 - g0 > 0, g1 - g0, 1.0), 0.0, 1.0)
    js = j0[up] + s * (j1[up] - j0[up])
    out[up] = 0.5 * (np.maximum(js, 0.0) + np.maximum(j1[up], 0.0)) * (1.0 - s) * h[up]

    # drop: the current turns negative inside the interval
    down = a0 & ~a1
    p0, p1 = j0[down], j1[down]
    crossing = (p0 > 0) & (p1 < 0)
    frac = np.where(crossing, p0 / np.where(crossing, p0 - p1, 1.0), 0.0)
    out[down] = np.where(crossing, 0.5 * p0 * frac * h[down], 0.5 * np.maximum(p0, 0.0) * h[down])
    return np.concatenate(([0.0], np.cumsum(out)))


def cut_off_integral(times, j_a, j_b, f_a, f_b) -> np.ndarray:
    """Cumulative integral of N * delta over ``[0, tau]``, discontinuity-aware."""
    times = np.asarray(times, dtype=float)
    fa, fb = _values(f_a), _values(f_b)
    return _edge_cut_off(times, np.asarray(j_a, float), fa) + _edge_cut_off(
        times, -np.asarray(j_b, float), -fb
    )


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


@dataclass(frozen=True)
class ArrivalMoments:
    """Mean and variance of the arrival time, conditional on detection."""

    mean: float
    variance: float
    truncated: bool = False
    conditional: bool = True

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def arrival_moments(delta, point_mass: float, times) -> ArrivalMoments:
    """Trapezoid moments of the arrival time.

    The point mass sits at tau = 0 and contributes nothing to either moment.
    ``truncated`` is set when the density is still above ``1e-4`` of its
    peak at the last recorded time.
    """
    delta = np.asarray(delta, dtype=float)
    times = np.asarray(times, dtype=float)
    if delta.shape != times.shape:
        raise ArrivalError("delta and times must have equal length")
    if np.any(delta < 0):
        raise ArrivalError("density must be non-negative")
    if not 0.0 <= point_mass <= 1.0:
        raise ArrivalError(f"point mass {point_mass} outside [0, 1]")
    mean = _trapezoid(times * delta, times)
    m2 = _trapezoid(times**2 * delta, times)
    var = m2 - mean**2
    if var < -1e-10:
        raise QuadratureError(f"negative variance {var:.3e}")
    peak = float(delta.max()) if delta.size else 0.0
    truncated = bool(peak > 0 and delta[-1] > 1e-4 * peak)
    return ArrivalMoments(mean, max(var, 0.0), truncated)


@dataclass(frozen=True, eq=False)
class ArrivalResult:
    times: np.ndarray
    j_a: np.ndarray
    j_b: np.ndarray
    f_a: np.ndarray
    f_b: np.ndarray
    runmax_fa: np.ndarray
    runmax_negfb: np.ndarray
    P: np.ndarray
    P0: float
    N: float
    Pc: np.ndarray
    delta: np.ndarray
    point_mass: float
    tail_converged: bool
    is_point: bool

    def cut_off_cumulative(self) -> np.ndarray:
        """N * integral of delta over [0, tau] for every recorded tau."""
        return cut_off_integral(self.times, self.j_a, self.j_b, self.f_a, self.f_b)

    def measure_residual(self) -> float:
        """max over tau of |point_mass*N + N*int delta - P(tau)|."""
        return float(np.max(np.abs(self.point_mass * self.N + self.cut_off_cumulative() - self.P)))

    def moments(self) -> ArrivalMoments:
        return arrival_moments(self.delta, self.point_mass, self.times)


def analyze(record: BoundaryRecord, P0: float = 0.0, tail_fraction: float = 0.1,
            tail_tol: float = 1e-3) -> ArrivalResult:
    """Full arrival-time analysis of a boundary-current record."""
    times = record.times
    is_point = record.detector.is_point
    if is_point and P0 != 0.0:
        raise ArrivalError("a point detector has P(0) = 0")
    fa = cumulative_current(times, record.j_a)
    fb = fa if is_point else cumulative_current(times, record.j_b)
    jb = record.j_a if is_point else record.j_b
    P = detection_probability(fa, fb, P0)
    N, Pc, converged = conditionalize(P, times, tail_fraction, tail_tol)
    delta = arrival_density(record.j_a, jb, fa, fb, N)
    return ArrivalResult(
        times=times,
        j_a=np.asarray(record.j_a),
        j_b=np.asarray(jb),
        f_a=fa.values,
        f_b=fb.values,
        runmax_fa=running_max(fa.values),
        runmax_negfb=running_max(-fb.values),
        P=P,
        P0=float(P0),
        N=N,
        Pc=Pc,
        delta=delta,
        point_mass=float(Pc[0]),
        tail_converged=converged,
        is_point=is_point,
    )
