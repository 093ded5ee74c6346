import numpy as np
import pytest

import oracles
from bohmarrival.domain import GaussianPacketParams, PotentialSpec, TimeGrid, build_grid, superpose
from bohmarrival.propagator import (
    NormDriftError,
    default_dt,
    evaluate_potential,
    potential_on_grid,
    propagate,
    propagate_signed,
    steps_for,
)


def _free_error(k0, x_min, x_max, n, dt, t_end=1.0, x0=-4.0):
    g = build_grid(x_min, x_max, n)
    f = superpose([GaussianPacketParams(k0, x0, 1.0)], g)
    out = propagate(f, PotentialSpec.free(), TimeGrid(dt, steps_for(t_end, dt)))
    ref = oracles.free_packet(out.time, g.x, k0, x0, 1.0)
    return np.max(np.abs(out.values - ref))


def test_slow_packet_matches_momentum_quadrature():
    assert _free_error(1.0, -20.0, 16.0, 3601, 5e-3) < 1e-4


def test_error_is_second_order_in_dt():
    # dx fine enough that the spatial part of the error is negligible
    e1 = _free_error(1.0, -20.0, 16.0, 14401, 0.04)
    e2 = _free_error(1.0, -20.0, 16.0, 14401, 0.02)
    assert 3.5 < e1 / e2 < 4.5


def test_step_reflection_conserves_norm():
    g = build_grid(-60.0, 30.0, 1801)
    f = superpose([GaussianPacketParams(0.6, -15.0, 3.0)], g)
    drift = []
    propagate(f, PotentialSpec.step(0.0, 2.0), TimeGrid(0.02, 2000),
              [lambda k, t, w: drift.append(abs(w.norm() - 1.0))])
    assert max(drift) < 1e-8


def test_time_reversal_recovers_initial_state():
    g = build_grid(-30.0, 30.0, 1201)
    f = superpose([GaussianPacketParams(2.0, -5.0, 1.0)], g)
    spec = PotentialSpec.barrier(0.0, 1.0, 1.5)
    fwd = propagate_signed(f, spec, 0.01, 400)
    back = propagate_signed(fwd, spec, -0.01, 400)
    assert back.time == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(back.values - f.values)) < 1e-6


def test_recorders_see_every_step_including_zero():
    g = build_grid(-10.0, 10.0, 201)
    f = superpose([GaussianPacketParams(1.0, 0.0, 1.0)], g)
    seen = []

    def rec(k, t, w):
        seen.append((k, t))
        assert not w.values.flags.writeable

    propagate(f, PotentialSpec.free(), TimeGrid(0.05, 7), [rec])
    assert [k for k, _ in seen] == list(range(8))
    assert seen[-1][1] == pytest.approx(0.35)


def test_drift_guard_raises():
    g = build_grid(-10.0, 10.0, 201)
    f = superpose([GaussianPacketParams(1.0, 0.0, 1.0)], g)
    with pytest.raises(NormDriftError):
        propagate(f, PotentialSpec.free(), TimeGrid(0.05, 3), max_drift=-1.0)


def test_potential_edges_use_closed_step():
    spec = PotentialSpec.barrier(0.0, 2.0, 0.5)
    assert evaluate_potential(spec, [-1e-12, 0.0, 1.0, 2.0 - 1e-12, 2.0]).tolist() == [0, 0.5, 0.5, 0.5, 0]
    assert evaluate_potential(PotentialSpec.step(1.0, 3.0), 1.0) == 3.0


def test_tabulated_potential():
    g = build_grid(0.0, 1.0, 5)
    spec = PotentialSpec.tabulated([0.0, 1.0, 2.0, 1.0, 0.0])
    assert potential_on_grid(spec, g).tolist() == [0.0, 1.0, 2.0, 1.0, 0.0]
    with pytest.raises(ValueError):
        potential_on_grid(spec, build_grid(0.0, 1.0, 6))
    with pytest.raises(ValueError):
        evaluate_potential(spec, 0.5)


def test_default_dt_ratio():
    g = build_grid(0.0, 1.0, 11)
    assert default_dt(g) == pytest.approx(0.5 * 0.01)
    assert steps_for(1.0, 0.3) == 4
    assert steps_for(1.0, 0.25) == 4
