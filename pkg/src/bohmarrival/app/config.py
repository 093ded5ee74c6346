"""INI-style scenario files.

Example::

    [scenario]
    preset = step          ; optional starting point, later keys override it
    name = custom

    [grid]
    x_min = -140
    x_max = 60
    n_points = 2001

    [time]
    t_end = 70
    dt_over_dx2 = 0.5      ; or an explicit dt

    [potential]
    kind = step            ; free | barrier | step | tabulated
    x_s = 0
    height = 0.5

    [detector]
    a = -14
    b = -1                 ; omit for a point detector

    [packet.0]
    k0 = 0.6
    x0 = -16
    d = 4
    weight = 1

    [oracle]
    enabled = true
    samples = 2000
    seed = 20240917
    stride = 20
    n_eval = 40

    [output]
    dir = runs/step

All quantities are in reduced units (hbar = m = 1).
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import asdict
from pathlib import Path

from ..domain import DetectorRegion, GaussianPacketParams, PotentialSpec
from .presets import ConfigError, ScenarioConfig, preset

__all__ = ["load_config", "parse_config", "dump_config", "config_hash", "config_dict"]

_FLOAT_KEYS = {
    "grid": {"x_min": "x_min", "x_max": "x_max"},
    "time": {"t_end": "t_end", "dt": "dt", "dt_over_dx2": "dt_over_dx2"},
    "oracle": {"rtol": "rtol", "atol": "atol", "rho_floor": "rho_floor"},
    "arrival": {"tail_fraction": "tail_fraction", "tail_tol": "tail_tol"},
}
_INT_KEYS = {
    "grid": {"n_points": "n_points"},
    "oracle": {"samples": "samples", "seed": "seed", "stride": "stride", "n_eval": "n_eval",
               "export_trajectories": "export_trajectories"},
}


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)


def parse_config(text: str) -> ScenarioConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    try:
        return _build(cp)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _build(cp: configparser.ConfigParser) -> ScenarioConfig:
    sc = cp["scenario"] if cp.has_section("scenario") else {}
    base_tag = sc.get("preset")
    base = asdict_shallow(preset(base_tag)) if base_tag else {}
    kw = dict(base)
    kw["scenario"] = sc.get("name", base.get("scenario", "custom"))

    for section, keys in _FLOAT_KEYS.items():
        if cp.has_section(section):
            for key, attr in keys.items():
                if key in cp[section]:
                    kw[attr] = cp[section].getfloat(key)
    for section, keys in _INT_KEYS.items():
        if cp.has_section(section):
            for key, attr in keys.items():
                if key in cp[section]:
                    kw[attr] = cp[section].getint(key)
    if cp.has_section("oracle") and "enabled" in cp["oracle"]:
        kw["oracle"] = cp["oracle"].getboolean("enabled")
    if cp.has_section("output") and "dir" in cp["output"]:
        kw["out_dir"] = cp["output"]["dir"]

    if cp.has_section("potential"):
        kw["potential"] = _potential(cp["potential"])
    if cp.has_section("detector"):
        d = cp["detector"]
        a = d.getfloat("a")
        kw["detector"] = DetectorRegion(a, d.getfloat("b", fallback=a))

    packet_sections = sorted(
        (s for s in cp.sections() if s.startswith("packet.")), key=lambda s: int(s.split(".", 1)[1])
    )
    if packet_sections:
        kw["packets"] = tuple(
            GaussianPacketParams(
                k0=cp[s].getfloat("k0"),
                x0=cp[s].getfloat("x0"),
                d=cp[s].getfloat("d", fallback=1.0),
                weight=cp[s].getfloat("weight", fallback=1.0),
            )
            for s in packet_sections
        )
    missing = {"x_min", "x_max", "n_points", "t_end", "potential", "packets", "detector"} - kw.keys()
    if missing:
        raise ConfigError(f"config is missing {sorted(missing)}")
    return ScenarioConfig(**kw)


def _potential(sec) -> PotentialSpec:
    kind = sec.get("kind", "free")
    if kind == "free":
        return PotentialSpec.free()
    if kind == "barrier":
        return PotentialSpec.barrier(sec.getfloat("a"), sec.getfloat("b"), sec.getfloat("height", fallback=0.5))
    if kind == "step":
        return PotentialSpec.step(sec.getfloat("x_s", fallback=0.0), sec.getfloat("height", fallback=0.5))
    if kind == "tabulated":
        return PotentialSpec.tabulated([float(v) for v in sec["values"].replace("\n", ",").split(",") if v.strip()])
    raise ConfigError(f"unknown potential kind {kind!r}")


def asdict_shallow(cfg: ScenarioConfig) -> dict:
    return {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}


def config_dict(cfg: ScenarioConfig) -> dict:
    """JSON-ready echo of every configuration value."""
    d = asdict(cfg)
    d["potential"] = {k: v for k, v in asdict(cfg.potential).items() if k != "values"}
    if cfg.potential.kind == "tabulated":
        d["potential"]["values"] = list(cfg.potential.values)
    d["packets"] = [asdict(p) for p in cfg.packets]
    d["detector"] = {"a": cfg.detector.a, "b": cfg.detector.b}
    d.pop("notes", None)
    d["time_step"] = cfg.time_step
    d["n_steps"] = cfg.n_steps
    return d


def config_hash(cfg: ScenarioConfig) -> str:
    blob = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize ``cfg`` to the INI format read by :func:`parse_config`."""
    cp = _parser()
    cp["scenario"] = {"name": cfg.scenario}
    cp["grid"] = {"x_min": repr(cfg.x_min), "x_max": repr(cfg.x_max), "n_points": str(cfg.n_points)}
    cp["time"] = {"t_end": repr(cfg.t_end), "dt_over_dx2": repr(cfg.dt_over_dx2)}
    if cfg.dt is not None:
        cp["time"]["dt"] = repr(cfg.dt)
    pot = cfg.potential
    if pot.kind == "barrier":
        cp["potential"] = {"kind": "barrier", "a": repr(pot.a), "b": repr(pot.b), "height": repr(pot.height)}
    elif pot.kind == "step":
        cp["potential"] = {"kind": "step", "x_s": repr(pot.x_s), "height": repr(pot.height)}
    elif pot.kind == "tabulated":
        cp["potential"] = {"kind": "tabulated", "values": ",".join(repr(v) for v in pot.values)}
    else:
        cp["potential"] = {"kind": "free"}
    cp["detector"] = {"a": repr(cfg.detector.a), "b": repr(cfg.detector.b)}
    for i, p in enumerate(cfg.packets):
        cp[f"packet.{i}"] = {"k0": repr(p.k0), "x0": repr(p.x0), "d": repr(p.d), "weight": repr(p.weight)}
    cp["oracle"] = {
        "enabled": str(cfg.oracle).lower(),
        "samples": str(cfg.samples),
        "seed": str(cfg.seed),
        "stride": str(cfg.stride),
        "n_eval": str(cfg.n_eval),
        "rtol": repr(cfg.rtol),
        "atol": repr(cfg.atol),
        "rho_floor": repr(cfg.rho_floor),
        "export_trajectories": str(cfg.export_trajectories),
    }
    cp["arrival"] = {"tail_fraction": repr(cfg.tail_fraction), "tail_tol": repr(cfg.tail_tol)}
    cp["output"] = {"dir": cfg.out_dir}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
