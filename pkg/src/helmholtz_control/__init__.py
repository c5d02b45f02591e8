"""Exterior Helmholtz field control with a spherical-harmonic surface density.

A density on a small fictitious sphere radiates through a combined
single/double layer potential.  Its coefficients are chosen by weighted,
Tikhonov-regularised least squares so that the radiated field matches
prescribed potentials on disjoint control regions.
"""

__version__ = "0.1.0"

from .analysis import (
    Metrics,
    NoiseSpec,
    SweepSpec,
    compute_metrics,
    db_contrast,
    region_errors,
    run_sweep,
    stability_measure,
)
from .config import ExperimentConfig, RegionSpec, bundled_config, dumps_config, load_config, loads_config
from .geometry import (
    ExteriorSphereRegion,
    GeometryError,
    PointCloud,
    SectorRegion,
    SourceSpec,
    check_configuration,
    discretize_sector_boundary,
    discretize_sphere_boundary,
)
from .propagator import (
    DensityCoefficients,
    MediumParams,
    PropagatorConfig,
    dirichlet_trace,
    eval_field,
    eval_field_quadrature,
)
from .solver import Solution, SolverError, TargetField, assemble, solve_control_problem, solve_system
from .synthesis import (
    SynthesisSpec,
    fourier_solve,
    target_time_field,
    time_averaged_errors,
    time_field,
)

__all__ = [
    "Metrics", "NoiseSpec", "SweepSpec", "compute_metrics", "db_contrast", "region_errors", "run_sweep",
    "stability_measure", "ExperimentConfig", "RegionSpec", "bundled_config", "dumps_config",
    "load_config", "loads_config", "ExteriorSphereRegion", "GeometryError", "PointCloud",
    "SectorRegion", "SourceSpec", "check_configuration", "discretize_sector_boundary",
    "discretize_sphere_boundary", "DensityCoefficients", "MediumParams", "PropagatorConfig",
    "dirichlet_trace",     "eval_field", "eval_field_quadrature", "Solution", "SolverError", "TargetField", "assemble",
    "solve_control_problem", "solve_system", "SynthesisSpec", "fourier_solve",
    "target_time_field", "time_averaged_errors", "time_field",
]
