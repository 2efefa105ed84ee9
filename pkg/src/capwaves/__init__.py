"""Numerical laboratory for the dimensionless water-waves equations with
large bathymetry and surface tension."""

from .params import PhysicalScales, DimensionlessParams, nondimensionalize
from .spectral import Grid
from .dno import StripGrid, DNOSolver, apply_dno, dno_flat_analytic
from .evolution import SurfaceState, TrajectoryRecord

__all__ = [
    "PhysicalScales",
    "DimensionlessParams",
    "nondimensionalize",
    "Grid",
    "StripGrid",
    "DNOSolver",
    "apply_dno",
    "dno_flat_analytic",
    "SurfaceState",
    "TrajectoryRecord",
]

__version__ = "0.1.0"
