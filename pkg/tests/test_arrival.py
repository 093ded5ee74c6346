import math

import numpy as np
import pytest

import oracles

from bohmarrival.arrival import (
    ArrivalError,
    ProbabilityOvershootError,
    ZeroDetectionError,
    analyze,
    arrival_density,
    arrival_moments,
    conditionalize,
    cumulative_current,
    cut_off_integral,
    detection_probability,
    running_max,
)
from bohmarrival.domain import DetectorRegion
from bohmarrival.observables import BoundaryRecord


def smooth_record(n, det=DetectorRegion(0.0, 1.0)):
    t = np.linspace(0.0, 3.0, n)
    return BoundaryRecord(det, t, 0.2 * np.sin(3 * t), 0.06 * np.cos(2 * t))


def test_cumulative_current_validates_times():
    with pytest.raises(ArrivalError):
        cumulative_current([0.0, 1.0, 1.0], [0.0, 0.0, 0.0])
    with pytest.raises(ArrivalError):
        cumulative_current([0.0, 1.0], [0.0])


def test_overshoot_is_rejected():
    f = np.array([0.0, 0.6, 0.9])
    with pytest.raises(ProbabilityOvershootError):
        detection_probability(f, -f, 0.0)
    # within tolerance of 1 is accepted
    assert detection_probability(f, np.zeros(3), 0.1 + 5e-7)[-1] == pytest.approx(1.0, abs=1e-6)


def test_tail_flag():
    t = np.linspace(0.0, 10.0, 101)
    _, _, flat = conditionalize(1 - np.exp(-3 * t), t)
    _, _, rising = conditionalize(t / 20.0, t)
    assert flat and not rising


def test_density_rejects_bad_inputs():
    z = np.zeros(3)
    with pytest.raises(ArrivalError):
        arrival_density(z, z, z, z, 0.0)
    with pytest.raises(ArrivalError):
        arrival_density(z, z, z, np.zeros(4), 1.0)


def test_density_clamps_negative_edge_terms():
    # at tau = 0 both Theta factors are 1 and the sampled current is inflowing on b
    delta = arrival_density(np.array([-0.5, 0.1]), np.array([0.5, 0.1]),
                            np.array([0.0, -0.2]), np.array([0.0, 0.3]), 1.0)
    assert np.all(delta >= 0.0)
    assert delta[0] == 0.0


def test_moments_validate():
    t = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ArrivalError):
        arrival_moments(-np.ones(5), 0.0, t)
    with pytest.raises(ArrivalError):
        arrival_moments(np.ones(4), 0.0, t)
    with pytest.raises(ArrivalError):
        arrival_moments(np.ones(5), 1.5, t)


def test_moments_flag_truncation():
    t = np.linspace(0.0, 10.0, 1001)
    fast, slow = np.exp(-t), np.exp(-0.1 * t)
    assert not arrival_moments(fast / oracles.trapezoid_cumulative(t, fast)[-1], 0.0, t).truncated
    assert arrival_moments(slow / oracles.trapezoid_cumulative(t, slow)[-1], 0.0, t).truncated


def test_cut_off_integral_converges_to_detection_probability():
    errors = []
    for n in (301, 1201, 4801):
        r = smooth_record(n)
        fa = cumulative_current(r.times, r.j_a).values
        fb = cumulative_current(r.times, r.j_b).values
        c = cut_off_integral(r.times, r.j_a, r.j_b, fa, fb)
        errors.append(np.max(np.abs(c - running_max(fa) - running_max(-fb))))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-7


def test_analyze_region_detector():
    r = smooth_record(4801)
    res = analyze(r, P0=0.1)
    assert res.P[0] == pytest.approx(0.1)
    assert np.all(np.diff(res.P) >= 0)
    assert res.N == res.P[-1]
    assert res.point_mass == pytest.approx(0.1 / res.N)
    assert res.measure_residual() < 1e-7
    m = res.moments()
    assert math.isfinite(m.mean) and m.variance >= 0


def test_analyze_point_detector():
    r = smooth_record(2401, DetectorRegion(0.0))
    res = analyze(r)
    assert res.is_point
    assert np.array_equal(res.f_a, res.f_b)
    with pytest.raises(ArrivalError):
        analyze(r, P0=0.2)


def test_analyze_without_detection():
    t = np.linspace(0.0, 1.0, 11)
    r = BoundaryRecord(DetectorRegion(0.0, 1.0), t, -np.ones(11) * 0.1, np.ones(11) * 0.1)
    with pytest.raises(ZeroDetectionError):
        analyze(r)
