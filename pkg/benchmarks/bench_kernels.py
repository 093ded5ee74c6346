"""Compiled vs numpy kernels: Crank-Nicolson steps and trajectory ensembles.

Usage::

    python benchmarks/bench_kernels.py [--points 4001] [--steps 2000] [--samples 500]

Both backends get identical inputs; the script also reports the largest
difference between their outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bohmarrival import _pykernels
from bohmarrival.app import preset, simulate
from bohmarrival.domain import build_grid, gaussian_packet, GaussianPacketParams
from bohmarrival.observables import probability_density
from bohmarrival.trajectories import _output_times, sample_initial_positions

try:
    from bohmarrival import _ckernels
except ImportError:
    _ckernels = None


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_cn(points, steps, repeat):
    g = build_grid(-40.0, 40.0, points)
    psi0 = gaussian_packet(0.0, g.x, GaussianPacketParams(2.0, -10.0, 1.0))
    dt = 0.5 * g.dx**2
    h = 1.0 / g.dx**2
    da, db, off = 1 + 0.5j * dt * h * np.ones(points), 1 - 0.5j * dt * h * np.ones(points), -0.25j * dt / g.dx**2

    def loop(mod):
        st = mod.CrankNicolsonStepper(da, db, off)

        def run():
            psi = psi0
            for _ in range(steps):
                psi = st(psi)
            return psi
        return run

    rows = []
    results = {}
    for name, mod in (("python", _pykernels), ("cython", _ckernels)):
        if mod is None:
            continue
        sec, psi = _best(loop(mod), repeat)
        results[name] = psi
        rows.append((name, sec, sec / steps * 1e6))
    diff = np.max(np.abs(results["python"] - results["cython"])) if len(results) == 2 else np.nan
    return rows, diff


def bench_ensemble(samples, repeat):
    cfg = preset("barrier").with_overrides(oracle=False, t_end=40.0)
    sim = simulate(cfg, keep_history=True)
    h = sim.history
    x0 = sample_initial_positions(probability_density(sim.initial), samples, cfg.seed)
    t_out = _output_times(h, None)
    rows = []
    results = {}
    for name, mod in (("python", _pykernels), ("cython", _ckernels)):
        if mod is None:
            continue
        sec, (paths, status, nfev) = _best(lambda: mod.integrate_ensemble(*h.kernel_args(), x0, t_out), repeat)
        results[name] = np.asarray(paths)
        rows.append((name, sec, nfev / sec / 1e6))
    diff = np.nanmax(np.abs(results["python"] - results["cython"])) if len(results) == 2 else np.nan
    return rows, diff


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=4001)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; timing the numpy fallback only")

    rows, diff = bench_cn(args.points, args.steps, args.repeat)
    print(f"Crank-Nicolson, {args.points} nodes x {args.steps} steps")
    for name, sec, per in rows:
        print(f"  {name:7s} {sec:8.3f} s   {per:8.2f} us/step")
    if len(rows) == 2:
        print(f"  speedup {rows[0][1] / rows[1][1]:.1f}x, max |diff| = {diff:.2e}")

    rows, diff = bench_ensemble(args.samples, args.repeat)
    print(f"Dormand-Prince ensemble, {args.samples} trajectories (barrier scenario, t <= 40)")
    for name, sec, rate in rows:
        print(f"  {name:7s} {sec:8.3f} s   {rate:8.2f} M velocity evals/s")
    if len(rows) == 2:
        print(f"  speedup {rows[0][1] / rows[1][1]:.1f}x, max |diff| = {diff:.2e}")


if __name__ == "__main__":
    main()
