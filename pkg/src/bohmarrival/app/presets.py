"""Scenario configuration and the three built-in scenarios.

Only the free six-Gaussian scenario has published parameters.  The barrier
and step scenarios are reconstructions that reproduce the qualitative
behaviour (negligible initial overlap and a late decrease of f_a for the
barrier; substantial initial overlap and near-certain detection for the
step), not specific numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..domain import DetectorRegion, GaussianPacketParams, PotentialSpec, six_gaussian_packets

__all__ = ["ScenarioConfig", "PRESETS", "ALIASES", "preset", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    x_min: float
    x_max: float
    n_points: int
    t_end: float
    potential: PotentialSpec
    packets: tuple
    detector: DetectorRegion
    dt: float | None = None  # None: dt_over_dx2 * dx**2
    dt_over_dx2: float = 0.5
    oracle: bool = True
    samples: int = 2000
    seed: int = 20240917
    stride: int = 20
    n_eval: int = 40
    rtol: float = 1e-6
    atol: float = 1e-9
    rho_floor: float = 1e-12
    tail_fraction: float = 0.1
    tail_tol: float = 1e-3
    export_trajectories: int = 100
    out_dir: str = "runs"
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "packets", tuple(self.packets))
        if self.scenario not in ("free_six_gaussians", "barrier", "step", "custom"):
            raise ConfigError(f"unknown scenario tag {self.scenario!r}")
        if not self.x_min < self.x_max:
            raise ConfigError("grid needs x_min < x_max")
        if self.n_points < 3:
            raise ConfigError("grid needs at least 3 points")
        if not self.t_end > 0:
            raise ConfigError("time window must be positive")
        if not self.packets:
            raise ConfigError("at least one packet is required")
        for x in (self.detector.a, self.detector.b):
            if not self.x_min <= x <= self.x_max:
                raise ConfigError(f"detector edge {x} outside the grid")
        if self.potential.kind == "barrier" and not (
            self.x_min <= self.potential.a < self.potential.b <= self.x_max
        ):
            raise ConfigError("barrier must lie inside the grid")
        if self.samples < 1 or self.stride < 1 or self.n_eval < 1:
            raise ConfigError("samples, stride and n_eval must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if abs(sum(p.weight**2 for p in self.packets) - 1.0) > 1e-6:
            raise ConfigError("packet weights must satisfy sum(weight**2) == 1")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def time_step(self) -> float:
        return self.dt if self.dt is not None else self.dt_over_dx2 * self.dx**2

    @property
    def n_steps(self) -> int:
        """Steps covering ``t_end``, rounded up to a multiple of the snapshot stride."""
        n = math.ceil(self.t_end / self.time_step - 1e-9)
        return self.stride * math.ceil(n / self.stride)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _free() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="free_six_gaussians",
        x_min=-80.0,
        x_max=80.0,
        n_points=8001,
        t_end=8.0,
        potential=PotentialSpec.free(),
        packets=tuple(six_gaussian_packets(k0=5.0, x0=-4.0, d=1.0)),
        detector=DetectorRegion(-2.5),
        stride=50,
    )


# barrier: tunnelling regime (E = 0.32 < 0.5) so part of the probability that
# entered the barrier flows back out through x = a; ten widths of clearance
# keep the initial overlap with [0, 2] near 1e-23
BARRIER_PACKET = GaussianPacketParams(k0=0.8, x0=-30.0, d=3.0)


def _barrier() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="barrier",
        x_min=-170.0,
        x_max=170.0,
        n_points=3401,
        t_end=80.0,
        potential=PotentialSpec.barrier(0.0, 2.0, 0.5),
        packets=(BARRIER_PACKET,),
        detector=DetectorRegion(0.0, 2.0),
    )


# step: k0 = 0.6 keeps the momentum distribution below the threshold k = 1 to
# about 3 standard deviations; the detector covers the packet's front half and
# reaches almost to the step, so P(0) ~ 0.31 and nearly every trajectory
# crosses it before or after reflection
STEP_PACKET = GaussianPacketParams(k0=0.6, x0=-16.0, d=4.0)


def _step() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="step",
        x_min=-140.0,
        x_max=60.0,
        n_points=2001,
        t_end=70.0,
        potential=PotentialSpec.step(0.0, 0.5),
        packets=(STEP_PACKET,),
        detector=DetectorRegion(-14.0, -1.0),
    )


PRESETS = {"free_six_gaussians": _free, "barrier": _barrier, "step": _step}
ALIASES = {"free": "free_six_gaussians"}


def preset(tag: str) -> ScenarioConfig:
    try:
        factory = PRESETS[ALIASES.get(tag, tag)]
    except KeyError:
        raise ConfigError(f"unknown preset {tag!r}; choose from {sorted(PRESETS)}") from None
    return factory()
