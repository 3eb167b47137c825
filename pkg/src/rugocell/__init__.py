"""rugocell: effective coefficients and macroscopic profiles for thin-film
thermomicropolar flow over a periodically rough wall.

The wall oscillation is resolved once, on a reference cell, and everything
macroscopic follows from three numbers (two mobility coefficients and a
temperature coefficient) plus closed-form profile formulas.  Two regimes
are solved: finite positive aspect ratio (cell PDE solves) and the
vanishing-aspect limit (closed-form quadratures).  The infinite-aspect
limit is reported as a documented zero-flow stub.
"""

__version__ = "0.1.0"

from .errors import (AdvectionDominatedWarning, BadResolution,
                     DegenerateLambda, IoError, NonFinite, NonPositiveA0Warning,
                     NonPositiveGap, OutOfDomain, ParseError, QuadratureFailure,
                     RugocellError, ShapeMismatch, SingularSystem,
                     SolverFailure, SupercriticalLimitWarning, TooFewSamples,
                     UnsupportedRegime, ValidationError)
from .geometry import CellMesh, RoughnessProfile, build_mesh, cell_quadrature, \
    make_profile
from .sparse_solver import LinearSolveReport, SparseMatrix, solve
from .stokes_cell import StokesCellSolution, energy_identity_check, \
    solve_stokes_cell
from .laplace_cell import LaplaceCellSolution, solve_laplace_cell
from .heat_cell import HeatCellSolution, solve_heat_cell, temperature_profile
from .subcritical import (SubcriticalCoefficients, compute_a0, compute_b0,
                          compute_c0, compute_coefficients, compute_pi_prime,
                          subcritical_cell_fields)
from .macro import (Discretization, FluidParams, ForcingData, MacroReport,
                    Regime, average_microrotation, average_velocity,
                    pressure_profile, run_model)
from .config import OutputOptions, RunConfig, canonical_dict, config_hash, \
    load_config, parse_config
from .report import ReportFile, build_report_file, emit, profiles_csv, \
    run_from_config, sweep

__all__ = [
    "__version__",
    "AdvectionDominatedWarning", "BadResolution", "DegenerateLambda",
    "IoError", "NonFinite", "NonPositiveA0Warning", "NonPositiveGap",
    "OutOfDomain", "ParseError", "QuadratureFailure", "RugocellError",
    "ShapeMismatch", "SingularSystem", "SolverFailure",
    "SupercriticalLimitWarning", "TooFewSamples", "UnsupportedRegime",
    "ValidationError",
    "CellMesh", "RoughnessProfile", "build_mesh", "cell_quadrature",
    "make_profile",
    "LinearSolveReport", "SparseMatrix", "solve",
    "StokesCellSolution", "energy_identity_check", "solve_stokes_cell",
    "LaplaceCellSolution", "solve_laplace_cell",
    "HeatCellSolution", "solve_heat_cell", "temperature_profile",
    "SubcriticalCoefficients", "compute_a0", "compute_b0", "compute_c0",
    "compute_coefficients", "compute_pi_prime", "subcritical_cell_fields",
    "Discretization", "FluidParams", "ForcingData", "MacroReport", "Regime",
    "average_microrotation", "average_velocity", "pressure_profile",
    "run_model",
    "OutputOptions", "RunConfig", "canonical_dict", "config_hash",
    "load_config", "parse_config",
    "ReportFile", "build_report_file", "emit", "profiles_csv",
    "run_from_config", "sweep",
]
