"""Coherent integration for constant-Cartesian-velocity radar targets.

Pipeline: synthesize pulse-compressed echo cubes for targets whose slant
range follows the exact square-root law, run search-based coherent
integrators (the square-root-model transform plus polynomial and MTD
baselines), CFAR-detect peaks, and estimate target parameters and tracks.
"""

from .scene import (
    C,
    CcvTarget,
    DerivedParams,
    RadarParams,
    TaylorCoeffs,
    ccv_from_cartesian,
    derived_params,
    range_at,
    taylor_coeffs,
)
from .echo import DataCube, crop_cube, pulse_compress, synth_compressed, synth_raw
from .grids import Axis, IntegrationMap, SearchGrid, build_search_grid
from .integrate import arem_grft, mtd, poly_accel_spacing, poly_grft, poly_jerk_spacing, trajectory_of_cell
from .backend import available_backends, get_backend, set_backend
from .detect import (
    Detection,
    PdCurve,
    ThresholdCalibration,
    calibrate_threshold,
    detect,
    estimate,
    monte_carlo_pd,
    snr_at_pd,
)

__version__ = "0.1.0"

__all__ = [
    "C",
    "RadarParams",
    "CcvTarget",
    "TaylorCoeffs",
    "DerivedParams",
    "ccv_from_cartesian",
    "range_at",
    "taylor_coeffs",
    "derived_params",
    "DataCube",
    "synth_compressed",
    "synth_raw",
    "pulse_compress",
    "crop_cube",
    "Axis",
    "SearchGrid",
    "IntegrationMap",
    "build_search_grid",
    "arem_grft",
    "poly_grft",
    "mtd",
    "trajectory_of_cell",
    "poly_accel_spacing",
    "poly_jerk_spacing",
    "available_backends",
    "get_backend",
    "set_backend",
    "Detection",
    "PdCurve",
    "ThresholdCalibration",
    "calibrate_threshold",
    "detect",
    "estimate",
    "monte_carlo_pd",
    "snr_at_pd",
    "__version__",
]
