"""Geodesics of fractional Sobolev metrics on immersed loops and on Diff(S^1)."""

from .config import RunConfig
from .epdiff import (
    CircleDiffeo,
    EulerianState,
    compare_formulations,
    diffeo_spray_rhs,
    epdiff_eulerian_step,
    lagrangian_vs_eulerian,
)
from .errors import (
    BlowUpError,
    ConvergenceError,
    ImmersionError,
    ImmersionLostError,
    SobgeoError,
    TrustRegionError,
    ValidationError,
)
from .geodesic import GeodesicState, Trajectory, exp_map, log_map, path_energy, regularity_diagnostic, spray_rhs
from .geometry import curvature, metric_data, project, pullback_metric, volume_density
from .grid import PeriodicGrid, diff_theta, fourier_tail_energy, quadrature, resample
from .operator import OperatorSpec, WeightedOperator, assemble, metric_inner
from .variation import adjoint_normal, derivative_P

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "CircleDiffeo",
    "ConvergenceError",
    "EulerianState",
    "GeodesicState",
    "ImmersionError",
    "ImmersionLostError",
    "OperatorSpec",
    "PeriodicGrid",
    "RunConfig",
    "SobgeoError",
    "Trajectory",
    "TrustRegionError",
    "ValidationError",
    "WeightedOperator",
    "adjoint_normal",
    "assemble",
    "compare_formulations",
    "curvature",
    "derivative_P",
    "diff_theta",
    "diffeo_spray_rhs",
    "epdiff_eulerian_step",
    "exp_map",
    "fourier_tail_energy",
    "lagrangian_vs_eulerian",
    "log_map",
    "metric_data",
    "metric_inner",
    "path_energy",
    "project",
    "pullback_metric",
    "quadrature",
    "regularity_diagnostic",
    "resample",
    "spray_rhs",
    "volume_density",
]
