"""Grids, wavefunction containers, potentials and Gaussian initial data.

All quantities are in reduced units (hbar = m = 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Grid1D",
    "TimeGrid",
    "WaveField",
    "GaussianPacketParams",
    "PotentialSpec",
    "DetectorRegion",
    "BoundaryAmplitudeWarning",
    "build_grid",
    "gaussian_packet",
    "superpose",
    "six_gaussian_packets",
]


class BoundaryAmplitudeWarning(UserWarning):
    """The wavefunction is not negligible at the hard walls."""


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min={self.x_min} must be < x_max={self.x_max}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ValueError(f"n_points must be an integer >= 3, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        # x_min + k*dx with the last node pinned, so positions are bit-stable
        nodes = self.x_min + np.arange(self.n_points) * self.dx
        nodes[-1] = self.x_max
        nodes.flags.writeable = False
        return nodes

    def contains(self, x: float) -> bool:
        return self.x_min <= x <= self.x_max


def build_grid(x_min: float, x_max: float, n_points: int) -> Grid1D:
    """Uniform grid with node ``k`` at ``x_min + k*dx``."""
    return Grid1D(float(x_min), float(x_max), int(n_points))


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time axis ``t_start + k*dt`` for ``k = 0..n_steps``."""

    dt: float
    n_steps: int
    t_start: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError("n_steps must be a non-negative integer")

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex samples of the wavefunction on ``grid`` at ``time``."""

    grid: Grid1D
    time: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {values.shape}"
            )
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def norm(self) -> float:
        """Discrete norm ``sum |psi_k|^2 dx``."""
        v = self.values
        return float(np.vdot(v, v).real * self.grid.dx)

    def normalized(self) -> "WaveField":
        n = self.norm()
        if not (n > 0 and math.isfinite(n)):
            raise ValueError("cannot normalize a field with zero or non-finite norm")
        return WaveField(self.grid, self.time, self.values / math.sqrt(n))

    def edge_amplitude(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))


@dataclass(frozen=True)
class GaussianPacketParams:
    k0: float
    x0: float
    d: float = 1.0
    weight: float = 1.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("packet width d must be positive")


@dataclass(frozen=True)
class PotentialSpec:
    """Piecewise-constant or tabulated potential.

    ``kind`` is one of ``free``, ``barrier``, ``step`` or ``tabulated``.
    Step functions follow Theta(0) = 1.
    """

    kind: str = "free"
    a: float = 0.0
    b: float = 0.0
    x_s: float = 0.0
    height: float = 0.0
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("free", "barrier", "step", "tabulated"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "barrier" and not self.a < self.b:
            raise ValueError("barrier requires a < b")
        if not math.isfinite(self.height):
            raise ValueError("potential height must be finite")
        if self.kind == "tabulated":
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def free(cls) -> "PotentialSpec":
        return cls("free")

    @classmethod
    def barrier(cls, a: float, b: float, height: float = 0.5) -> "PotentialSpec":
        return cls("barrier", a=float(a), b=float(b), height=float(height))

    @classmethod
    def step(cls, x_s: float = 0.0, height: float = 0.5) -> "PotentialSpec":
        return cls("step", x_s=float(x_s), height=float(height))

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> "PotentialSpec":
        return cls("tabulated", values=tuple(values))


@dataclass(frozen=True)
class DetectorRegion:
    """Interval ``[a, b]`` sensitive from ``t = 0``; ``b == a`` is a point detector."""

    a: float
    b: float | None = None

    def __post_init__(self):
        if self.b is None:
            object.__setattr__(self, "b", self.a)
        if not self.a <= self.b:
            raise ValueError(f"detector requires a <= b, got [{self.a}, {self.b}]")

    @property
    def is_point(self) -> bool:
        return self.a == self.b


def gaussian_packet(t, x, p: GaussianPacketParams):
    """Closed-form free Gaussian packet Phi(t, x; k0, x0) of width ``d``.

    Normalized to one on the real line; unit weight is *not* applied.
    Accepts scalar or array ``t`` and ``x``.
    """
    d2 = p.d * p.d
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    num = (2.0 * d2 * p.k0 + 1j * (x - p.x0)) ** 2
    den = 4.0 * d2 + 2j * t
    # the exp(-k0^2 d^2) prefactor is folded into the exponent to avoid overflow
    expo = num / den - p.k0**2 * d2
    out = (d2 / (2.0 * np.pi)) ** 0.25 / np.sqrt(d2 + 0.5j * t) * np.exp(expo)
    if out.ndim == 0:
        return complex(out)
    return out


def superpose(
    packets: Sequence[GaussianPacketParams],
    grid: Grid1D,
    t: float = 0.0,
    edge_tol: float = 1e-8,
) -> WaveField:
    """Weighted sum of Gaussian packets, renormalized on ``grid``."""
    if len(packets) == 0:
        raise ValueError("need at least one packet")
    x = grid.x
    values = np.zeros(grid.n_points, dtype=np.complex128)
    for p in packets:
        values += p.weight * gaussian_packet(t, x, p)
    wf = WaveField(grid, float(t), values).normalized()
    if wf.edge_amplitude() > edge_tol:
        warnings.warn(
            f"|psi| = {wf.edge_amplitude():.3g} at the grid edge exceeds {edge_tol:g}",
            BoundaryAmplitudeWarning,
            stacklevel=2,
        )
    return wf


def six_gaussian_packets(k0: float = 5.0, x0: float = -4.0, d: float = 1.0):
    """Three weak right-movers and three strong left-movers.

    Right-movers sit at x0, 3*x0, 5*x0 with weight sqrt(1/9); left-movers
    at the mirrored centers with momentum -k0 and weight sqrt(2/9).
    """
    w_right = math.sqrt(1.0 / 9.0)
    w_left = math.sqrt(2.0 / 9.0)
    right = [GaussianPacketParams(k0, m * x0, d, w_right) for m in (1, 3, 5)]
    left = [GaussianPacketParams(-k0, -m * x0, d, w_left) for m in (1, 3, 5)]
    return right + left
