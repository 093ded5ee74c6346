"""Acceptance suite: one test and one PASS/FAIL line per criterion.

The three presets are run once per module, trajectory oracle included, and
shared by the criteria that inspect them.
"""

import math
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

import oracles
from bohmarrival.app import preset, run
from bohmarrival.app.pipeline import NORM_DRIFT_TOL
from bohmarrival.arrival import analyze
from bohmarrival.domain import DetectorRegion, GaussianPacketParams, PotentialSpec, TimeGrid, build_grid, gaussian_packet, superpose
from bohmarrival.observables import record_boundary_currents
from bohmarrival.propagator import propagate, steps_for

PRESET_TAGS = ("free", "barrier", "step")
MEASURE_TOL = 1e-6


@pytest.fixture(scope="module")
def outcomes(tmp_path_factory):
    root = tmp_path_factory.mktemp("presets")
    return {tag: run(preset(tag), root / tag, oracle=True) for tag in PRESET_TAGS}


@pytest.mark.slow
def test_criterion_1_free_gaussian_fidelity(report):
    p = GaussianPacketParams(5.0, -4.0, 1.0)
    g = build_grid(-13.0, 10.0, 92001)  # dx = 2.5e-4; spatial error well below the dt error
    start = superpose([p], g)
    exact = gaussian_packet(1.0, g.x, p)
    spot = slice(0, None, 50)
    quad = oracles.free_packet(1.0, g.x[spot], p.k0, p.x0, p.d)
    assert np.max(np.abs(quad - exact[spot])) < 1e-12

    errors = []
    for dt in (8e-4, 4e-4):
        out = propagate(start, PotentialSpec.free(), TimeGrid(dt, steps_for(1.0, dt)))
        assert out.time == pytest.approx(1.0, abs=1e-12)
        errors.append(float(np.max(np.abs(out.values - exact))))
    ratio = errors[0] / errors[1]
    ok = errors[0] < 1e-4 and errors[1] < 1e-4 and 3.5 < ratio < 4.5
    report("1", ok, f"max|err| {errors[0]:.2e} -> {errors[1]:.2e} on halving dt, ratio {ratio:.2f}")


@pytest.mark.slow
def test_criterion_2_norm_conservation(outcomes, report):
    drifts = {tag: o.simulation.norm_drift for tag, o in outcomes.items()}
    ok = all(d < NORM_DRIFT_TOL for d in drifts.values())
    report("2", ok, "norm drift " + ", ".join(f"{t} {d:.1e}" for t, d in drifts.items()))


@pytest.mark.slow
def test_criterion_3_trajectory_cross_validation(outcomes, report):
    parts, ok = [], True
    for tag, o in outcomes.items():
        c = o.comparison
        good = c["samples"] == 2000 and c["n_eval"] >= 20 and c["n_failed"] == 0
        ok &= good
        parts.append(f"{tag} {c['n_eval'] - c['n_failed']}/{c['n_eval']} (max {c['max_sigma_ratio']:.2f} sigma)")
    report("3", ok, "within 3 sigma of 2000 paths: " + ", ".join(parts))


def test_criterion_4_single_sign_current(report):
    g = build_grid(-25.0, 45.0, 3501)
    det = DetectorRegion(0.0)
    rec = record_boundary_currents(det, g)
    start = superpose([GaussianPacketParams(2.0, -6.0, 1.0)], g)
    propagate(start, PotentialSpec.free(), TimeGrid(0.01, 800), [rec])
    res = analyze(rec.record())
    flux = oracles.trapezoid_cumulative(res.times, np.abs(res.j_a))
    assert np.all(res.j_a > -1e-12)
    err = float(np.max(np.abs(res.P - flux)))
    # the sampled current itself tracks the exact free current
    exact = oracles.free_density(res.times, 0.0, 2.0, -6.0) * oracles.free_velocity(res.times, 0.0, 2.0, -6.0)
    assert np.max(np.abs(res.j_a - exact)) < 1e-3
    crossed = oracles.free_mass_right_of(8.0, 0.0, 2.0, -6.0) - oracles.free_mass_right_of(0.0, 0.0, 2.0, -6.0)
    assert abs(res.P[-1] - crossed) < 5e-4
    report("4", err < 1e-6, f"max|P - int|j|| = {err:.1e}, P(end) = {res.P[-1]:.6f}")


@pytest.mark.slow
def test_criterion_5_plateaus(outcomes, report):
    res = outcomes["free"].arrival
    dP = np.diff(res.P)
    flat = (np.diff(res.f_a) < 0) & (dP == 0.0) & (res.delta[:-1] == 0.0) & (res.delta[1:] == 0.0)
    ok = bool(flat.any()) and bool(np.all(dP >= 0.0))
    first = int(np.argmax(flat))
    report("5", ok, f"{int(flat.sum())} plateau steps with f_a falling (first at t={res.times[first]:.3f}), "
                    f"min dP = {dP.min():.1e}")


@pytest.mark.slow
def test_criterion_6_barrier_reflection(outcomes, report):
    res = outcomes["barrier"].arrival
    fb_ok = bool(np.all(res.f_b >= 0.0) and np.all(np.diff(res.f_b) >= 0.0))
    runmax_ok = bool(np.all(res.runmax_negfb == 0.0))
    peak = int(np.argmax(res.f_a))
    tau_r = res.times[peak]
    falls = tau_r > 0 and res.f_a[-1] < res.f_a[peak]
    report("6", fb_ok and runmax_ok and falls,
           f"f_b >= 0 non-decreasing: {fb_ok}, runmax(-f_b) == 0: {runmax_ok}, "
           f"f_a falls by {res.f_a[peak] - res.f_a[-1]:.2e} after tau_r = {tau_r:.2f}")


@pytest.mark.slow
def test_criterion_7_step_initial_overlap(outcomes, report):
    res = outcomes["step"].arrival
    ok = res.P[0] >= 0.05 and res.N >= 0.98 and res.tail_converged
    report("7", ok, f"P(0) = {res.P[0]:.4f}, N = {res.N:.6f}, tail flat: {res.tail_converged}")


@pytest.mark.slow
def test_criterion_8_measure_consistency(outcomes, report):
    parts, ok = [], True
    for tag, o in outcomes.items():
        res = o.arrival
        total = res.point_mass * res.N + res.cut_off_cumulative()[-1]
        err = max(abs(total - res.P[-1]), res.measure_residual())  # final value and every earlier tau
        m = res.moments()
        good = err < MEASURE_TOL and math.isfinite(m.mean) and math.isfinite(m.variance) and m.variance >= 0
        ok &= good
        parts.append(f"{tag} {err:.1e} (mean {m.mean:.3f}, var {m.variance:.3f})")
    report("8", ok, "max over tau of |point_mass*N + N*int(delta) - P|: " + ", ".join(parts))


def test_criterion_9_worked_examples_fast(tmp_path, report):
    here = Path(__file__).parent
    xml = tmp_path / "examples.xml"
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", str(here / "test_examples.py"), "-q", "-p", "no:cacheprovider",
         f"--junitxml={xml}"],
        capture_output=True, text=True, cwd=here.parent,
    )
    suite = ET.parse(xml).getroot().find("testsuite")
    n = int(suite.get("tests"))
    bad = int(suite.get("failures")) + int(suite.get("errors")) + int(suite.get("skipped"))
    elapsed = sum(float(tc.get("time")) for tc in suite.iter("testcase"))
    ok = proc.returncode == 0 and bad == 0 and n > 0 and elapsed < 1.0
    report("9", ok, f"{n - bad}/{n} worked examples in {elapsed:.2f} s")
