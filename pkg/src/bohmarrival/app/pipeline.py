"""Scenario runs: propagate, record, analyze, cross-check and write results."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kernels
from ..arrival import ArrivalResult, analyze
from ..domain import BoundaryAmplitudeWarning, DetectorRegion, TimeGrid, WaveField, build_grid, superpose
from ..observables import BoundaryRecord, interval_probability, probability_density, record_boundary_currents
from ..propagator import propagate
from ..trajectories import EnsembleResult, FieldHistory, FieldHistoryRecorder, compare_cdfs, run_ensemble
from .config import config_dict, config_hash
from .io import (
    ARRIVAL_COLUMNS,
    BOUNDARY_COLUMNS,
    EMPIRICAL_COLUMNS,
    TRAJECTORY_COLUMNS,
    read_csv,
    write_csv,
    write_json,
)
from .presets import ScenarioConfig

__all__ = [
    "Simulation",
    "RunOutcome",
    "simulate",
    "run",
    "run_trajectories",
    "arrival_from_csv",
    "compare_files",
    "eval_times",
    "NORM_DRIFT_TOL",
    "MEASURE_TOL",
]

log = logging.getLogger(__name__)

NORM_DRIFT_TOL = 1e-8
MEASURE_TOL = 1e-6
# density, not amplitude: what the walls reflect back is |psi|^2
WALL_DENSITY_TOL = 1e-8


class _Monitor:
    """Tracks norm drift and wall amplitude over a run."""

    def __init__(self):
        self.norm0 = None
        self.max_drift = 0.0
        self.max_edge = 0.0

    def __call__(self, step: int, time: float, f: WaveField) -> None:
        n = f.norm()
        if self.norm0 is None:
            self.norm0 = n
        self.max_drift = max(self.max_drift, abs(n - self.norm0))
        self.max_edge = max(self.max_edge, f.edge_amplitude())


@dataclass
class Simulation:
    initial: WaveField
    final: WaveField
    record: BoundaryRecord
    history: FieldHistory | None
    P0: float
    norm_drift: float
    max_edge_amplitude: float


def simulate(cfg: ScenarioConfig, keep_history: bool = True) -> Simulation:
    """Propagate the configured state, recording boundary currents and (optionally) snapshots."""
    grid = build_grid(cfg.x_min, cfg.x_max, cfg.n_points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryAmplitudeWarning)
        initial = superpose(cfg.packets, grid, 0.0)
    boundary = record_boundary_currents(cfg.detector, grid)
    monitor = _Monitor()
    recorders = [boundary, monitor]
    snaps = FieldHistoryRecorder(cfg.stride) if keep_history else None
    if snaps is not None:
        recorders.append(snaps)
    tg = TimeGrid(cfg.time_step, cfg.n_steps)
    log.info("%s: %d nodes, dt=%.3g, %d steps, backend=%s",
             cfg.scenario, grid.n_points, tg.dt, tg.n_steps, kernels.BACKEND)
    final = propagate(initial, cfg.potential, tg, recorders)
    if monitor.max_edge**2 > WALL_DENSITY_TOL:
        warnings.warn(
            f"|psi|^2 reached {monitor.max_edge**2:.2e} at the hard walls; consider a wider grid",
            BoundaryAmplitudeWarning,
            stacklevel=2,
        )
    det = cfg.detector
    P0 = 0.0 if det.is_point else interval_probability(initial, det.a, det.b)
    return Simulation(
        initial=initial,
        final=final,
        record=boundary.record(),
        history=snaps.history() if snaps is not None else None,
        P0=P0,
        norm_drift=monitor.max_drift,
        max_edge_amplitude=monitor.max_edge,
    )


def eval_times(t_end: float, n_eval: int) -> np.ndarray:
    return np.linspace(0.0, t_end, n_eval + 1)[1:]


@dataclass
class RunOutcome:
    config: ScenarioConfig
    arrival: ArrivalResult
    simulation: Simulation
    ensemble: EnsembleResult | None = None
    comparison: dict | None = None
    summary: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def oracle_passed(self) -> bool | None:
        return None if self.comparison is None else self.comparison["passed"]


def _arrival_meta(cfg_hash: str, det: DetectorRegion, P0: float) -> dict:
    return {"config_sha256": cfg_hash, "detector_a": repr(det.a), "detector_b": repr(det.b),
            "P0": repr(P0)}


def _write_arrival(out: Path, res: ArrivalResult, meta: dict) -> Path:
    return write_csv(
        out / "arrival.csv",
        ARRIVAL_COLUMNS,
        [res.times, res.f_a, res.f_b, res.runmax_fa, res.runmax_negfb, res.P, res.Pc, res.delta],
        meta,
    )


def _arrival_summary(res: ArrivalResult) -> dict:
    mom = res.moments()
    plateau = np.diff(res.P) == 0
    return {
        "N": res.N,
        "P0": res.P0,
        "point_mass": res.point_mass,
        "tail_converged": res.tail_converged,
        "mean_arrival_time": mom.mean,
        "variance_arrival_time": mom.variance,
        "moments_truncated": mom.truncated,
        "measure_residual": res.measure_residual(),
        "plateau_fraction": float(np.mean(plateau)) if plateau.size else 0.0,
        "point_detector": res.is_point,
    }


def _check_invariants(res: ArrivalResult, norm_drift: float | None) -> list[str]:
    bad = []
    if np.any(np.diff(res.P) < 0):
        bad.append("P decreases")
    if res.P.max() > 1.0 + 1e-6:
        bad.append("P exceeds 1")
    resid = res.measure_residual()
    if resid > MEASURE_TOL:
        bad.append(f"measure residual {resid:.3e} > {MEASURE_TOL:g}")
    if norm_drift is not None and norm_drift > NORM_DRIFT_TOL:
        bad.append(f"norm drift {norm_drift:.3e} > {NORM_DRIFT_TOL:g}")
    return bad


def _write_ensemble(out: Path, ens: EnsembleResult, ev: np.ndarray, cfg: ScenarioConfig,
                    meta: dict) -> dict:
    files = {}
    p_hat, stderr = ens.cdf(ev)
    files["empirical"] = write_csv(
        out / "empirical.csv", EMPIRICAL_COLUMNS,
        [ev, p_hat, stderr, np.full(ev.size, ens.count)], {**meta, "seed": ens.seed},
    )
    n_exp = min(cfg.export_trajectories, ens.x0.size)
    if n_exp > 0:
        order = np.argsort(ens.x0, kind="stable")
        pick = order[np.unique(np.linspace(0, order.size - 1, n_exp).round().astype(int))]
        ids, ts, xs = [], [], []
        for i in pick:
            ok = np.isfinite(ens.paths[i])
            ids.append(np.full(ok.sum(), i))
            ts.append(ens.times[ok])
            xs.append(ens.paths[i][ok])
        files["trajectories"] = write_csv(
            out / "trajectories.csv", TRAJECTORY_COLUMNS,
            [np.concatenate(ids), np.concatenate(ts), np.concatenate(xs)], {**meta, "seed": ens.seed},
        )
    return files


def _ensemble_summary(ens: EnsembleResult) -> dict:
    return {"samples": int(ens.x0.size), "valid": ens.count, "aborted": ens.n_aborted,
            "exited": ens.n_exited, "seed": ens.seed}


def run(cfg: ScenarioConfig, out_dir=None, oracle: bool | None = None) -> RunOutcome:
    """Full pipeline: propagation, arrival analysis, optional trajectory oracle, files.

    Writes ``boundary.csv``, ``arrival.csv``, ``summary.json`` and, with the
    oracle, ``empirical.csv`` and ``trajectories.csv`` into ``out_dir``.
    """
    oracle = cfg.oracle if oracle is None else oracle
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    sim = simulate(cfg, keep_history=oracle)
    det = cfg.detector
    meta = _arrival_meta(h, det, sim.P0)

    files = {"boundary": write_csv(out / "boundary.csv", BOUNDARY_COLUMNS,
                                   [sim.record.times, sim.record.j_a, sim.record.j_b], meta)}
    res = analyze(sim.record, sim.P0, cfg.tail_fraction, cfg.tail_tol)
    files["arrival"] = _write_arrival(out, res, meta)
    violations = _check_invariants(res, sim.norm_drift)

    outcome = RunOutcome(cfg, res, sim, files=files, violations=violations)
    summary = {
        "scenario": cfg.scenario,
        "config_sha256": h,
        "config": config_dict(cfg),
        "backend": kernels.BACKEND,
        "norm_drift": sim.norm_drift,
        "max_edge_amplitude": sim.max_edge_amplitude,
        "t_final": float(res.times[-1]),
        **_arrival_summary(res),
        "invariant_violations": violations,
    }
    if oracle:
        ens = run_ensemble(sim.history, probability_density(sim.initial), det, cfg.samples,
                           cfg.seed, cfg.rtol, cfg.atol, cfg.rho_floor)
        ev = eval_times(float(res.times[-1]), cfg.n_eval)
        p_hat, _ = ens.cdf(ev)
        comparison = compare_cdfs(res.times, res.P, ev, p_hat, ens.count)
        files.update(_write_ensemble(out, ens, ev, cfg, {"config_sha256": h}))
        outcome.ensemble, outcome.comparison = ens, comparison
        summary["ensemble"] = _ensemble_summary(ens)
        summary["comparison"] = comparison
    files["summary"] = write_json(out / "summary.json", summary)
    outcome.summary = summary
    return outcome


def run_trajectories(cfg: ScenarioConfig, out_dir=None) -> RunOutcome:
    """Oracle only: propagate, integrate the ensemble and write its outputs."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    sim = simulate(cfg, keep_history=True)
    ens = run_ensemble(sim.history, probability_density(sim.initial), cfg.detector, cfg.samples,
                       cfg.seed, cfg.rtol, cfg.atol, cfg.rho_floor)
    ev = eval_times(sim.history.t_end, cfg.n_eval)
    files = _write_ensemble(out, ens, ev, cfg, {"config_sha256": h})
    summary = {"scenario": cfg.scenario, "config_sha256": h, "config": config_dict(cfg),
               "backend": kernels.BACKEND, "ensemble": _ensemble_summary(ens)}
    files["summary"] = write_json(out / "trajectories_summary.json", summary)
    return RunOutcome(cfg, None, sim, ensemble=ens, summary=summary, files=files)


def _detector_from_meta(meta: dict) -> DetectorRegion:
    try:
        a = float(meta["detector_a"])
    except KeyError:
        raise ValueError("boundary file lacks a '# detector_a=' line") from None
    return DetectorRegion(a, float(meta.get("detector_b", a)))


def arrival_from_csv(path, out_dir=None, P0: float | None = None,
                     tail_fraction: float = 0.1, tail_tol: float = 1e-3):
    """Analyze a recorded boundary-current file (columns t, j_a, j_b)."""
    meta, cols = read_csv(path)
    for c in BOUNDARY_COLUMNS:
        if c not in cols:
            raise ValueError(f"{path}: missing column {c!r}")
    det = _detector_from_meta(meta)
    if P0 is None:
        P0 = float(meta.get("P0", 0.0))
    record = BoundaryRecord(det, cols["t"], cols["j_a"], cols["j_b"])
    res = analyze(record, 0.0 if det.is_point else P0, tail_fraction, tail_tol)
    summary = {"source": str(path), **_arrival_summary(res),
               "invariant_violations": _check_invariants(res, None)}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        src_meta = {"config_sha256": meta.get("config_sha256", "unknown")}
        _write_arrival(out, res, {**src_meta, **_arrival_meta(src_meta["config_sha256"], det, res.P0)})
        write_json(out / "arrival_summary.json", summary)
    return res, summary


def compare_files(arrival_csv, empirical_csv, n_sigma: float = 3.0) -> dict:
    _, arr = read_csv(arrival_csv)
    _, emp = read_csv(empirical_csv)
    for c in ("t", "P"):
        if c not in arr:
            raise ValueError(f"{arrival_csv}: missing column {c!r}")
    for c in ("t", "P_hat", "samples"):
        if c not in emp:
            raise ValueError(f"{empirical_csv}: missing column {c!r}")
    count = int(emp["samples"][0]) if emp["samples"].size else 0
    if count < 1:
        raise ValueError("empirical file reports no samples")
    return compare_cdfs(arr["t"], arr["P"], emp["t"], emp["P_hat"], count, n_sigma)
