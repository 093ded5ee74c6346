"""Bohmian arrival-time distributions from boundary currents.

The wavefunction is propagated on a uniform grid, the probability current is
recorded at the detector edges, and the detection probability follows from
running maxima of the integrated currents.  An ensemble of Bohmian
trajectories provides an independent check.
"""

from .arrival import ArrivalResult, analyze, detection_probability, running_max
from .domain import (
    DetectorRegion,
    GaussianPacketParams,
    Grid1D,
    PotentialSpec,
    TimeGrid,
    WaveField,
    build_grid,
    gaussian_packet,
    superpose,
)
from .kernels import BACKEND
from .observables import BoundaryRecord, current_density, probability_density
from .propagator import propagate

__version__ = "0.1.0"

__all__ = [
    "ArrivalResult",
    "BACKEND",
    "BoundaryRecord",
    "DetectorRegion",
    "GaussianPacketParams",
    "Grid1D",
    "PotentialSpec",
    "TimeGrid",
    "WaveField",
    "analyze",
    "build_grid",
    "current_density",
    "detection_probability",
    "gaussian_packet",
    "probability_density",
    "propagate",
    "running_max",
    "superpose",
]
