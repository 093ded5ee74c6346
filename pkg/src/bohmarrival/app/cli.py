"""Arrival-time distributions from detector-edge currents, with a Bohmian trajectory cross-check.

Exit codes: 0 success, 1 configuration or input error, 2 invariant
violation, 3 trajectory oracle disagreement.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..arrival import ArrivalError, ProbabilityOvershootError
from ..propagator import NormDriftError
from . import pipeline
from .config import load_config
from .io import write_json
from .presets import ALIASES, PRESETS, ConfigError, preset

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_ORACLE = 3

log = logging.getLogger("bohmarrival")


def _resolve(target: str):
    if target in PRESETS or target in ALIASES:
        return preset(target)
    if not Path(target).exists():
        raise ConfigError(f"{target!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a file")
    return load_config(target)


def _overrides(cfg, args):
    kw = {"seed": args.seed, "samples": args.samples, "stride": args.stride}
    if getattr(args, "no_oracle", False):
        kw["oracle"] = False
    return cfg.with_overrides(**kw)


def _out_dir(cfg, args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(cfg.out_dir) / cfg.scenario


def _report_comparison(cmp: dict) -> None:
    print(f"oracle: {cmp['n_eval'] - cmp['n_failed']}/{cmp['n_eval']} evaluation times within "
          f"3 sigma (max |P - P_hat| = {cmp['max_abs_diff']:.4f}, "
          f"max ratio = {cmp['max_sigma_ratio']:.2f}, samples = {cmp['samples']})")


def cmd_run(args) -> int:
    cfg = _overrides(_resolve(args.target), args)
    out = _out_dir(cfg, args)
    outcome = pipeline.run(cfg, out)
    s = outcome.summary
    print(f"{cfg.scenario}: N = {s['N']:.6f}, P0 = {s['P0']:.6f}, "
          f"norm drift = {s['norm_drift']:.2e}, measure residual = {s['measure_residual']:.2e}")
    if not s["tail_converged"]:
        print("warning: P has not levelled off by the end of the window; N is a lower bound")
    print(f"results written to {out}")
    if outcome.violations:
        for v in outcome.violations:
            print(f"invariant violated: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    if outcome.comparison is not None:
        _report_comparison(outcome.comparison)
        if not outcome.comparison["passed"]:
            return EXIT_ORACLE
    return EXIT_OK


def cmd_arrival(args) -> int:
    out = Path(args.out) if args.out is not None else None
    _, summary = pipeline.arrival_from_csv(args.record, out, P0=args.p0)
    print(f"N = {summary['N']:.6f}, P0 = {summary['P0']:.6f}, "
          f"measure residual = {summary['measure_residual']:.2e}")
    if summary["invariant_violations"]:
        for v in summary["invariant_violations"]:
            print(f"invariant violated: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_trajectories(args) -> int:
    cfg = _overrides(_resolve(args.target), args)
    out = _out_dir(cfg, args)
    outcome = pipeline.run_trajectories(cfg, out)
    ens = outcome.ensemble
    print(f"{ens.x0.size} trajectories: {ens.n_aborted} aborted, {ens.n_exited} left the grid; "
          f"results written to {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cmp = pipeline.compare_files(args.arrival, args.empirical)
    _report_comparison(cmp)
    if args.out is not None:
        write_json(Path(args.out) / "comparison.json", cmp)
    return EXIT_OK if cmp["passed"] else EXIT_ORACLE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bohmarrival", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def oracle_flags(sp, with_toggle=True):
        sp.add_argument("--seed", type=int, help="RNG seed for initial positions")
        sp.add_argument("--samples", type=int, help="number of trajectories")
        sp.add_argument("--stride", type=int, help="propagation steps between stored snapshots")
        sp.add_argument("--out", help="output directory")
        if with_toggle:
            sp.add_argument("--no-oracle", action="store_true", help="skip the trajectory cross-check")

    r = sub.add_parser("run", help="propagate a scenario and compute its arrival distribution")
    r.add_argument("target", help="config file or preset name")
    oracle_flags(r)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("arrival", help="arrival distribution from a boundary-current CSV")
    a.add_argument("record", help="CSV with columns t, j_a, j_b")
    a.add_argument("--p0", type=float, help="initial probability inside the detector")
    a.add_argument("--out", help="output directory")
    a.set_defaults(func=cmd_arrival)

    t = sub.add_parser("trajectories", help="integrate a trajectory ensemble only")
    t.add_argument("target", help="config file or preset name")
    oracle_flags(t, with_toggle=False)
    t.set_defaults(func=cmd_trajectories)

    c = sub.add_parser("compare", help="compare an arrival CSV against an empirical CDF CSV")
    c.add_argument("arrival")
    c.add_argument("empirical")
    c.add_argument("--out", help="directory for comparison.json")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except (NormDriftError, ProbabilityOvershootError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ArrivalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
