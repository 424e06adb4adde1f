"""periodforge - numerical construction of doubly periodic CL minimal surfaces.

Solves the period problem of the family by continuation from the x -> 0
limit, validates the closed-form limits and synthesizes triangle meshes of
the fundamental piece and its periodic tiling.

Basic usage:
    from periodforge import SolveConfig, solve_lambda, verify_periods

    params = solve_lambda(SolveConfig(x=1e-3, rho=0.0))
    report = verify_periods(params)
"""

__version__ = "0.1.0"

from .core.config import (
    ExportFormat,
    PeriodForgeConfig,
    QuadratureMethod,
    get_config,
    reset_config,
    set_config,
)

# Exception imports
from .core.exceptions import (
    AccuracyError,
    BracketError,
    ConfigurationError,
    CurveError,
    ExportError,
    GeometryError,
    LimitCheckError,
    MeshError,
    PeriodForgeError,
    SolverError,
    SymmetryError,
)
from .core.params import SurfaceParams

# Core imports
from .period_solver import (
    PeriodReport,
    SolutionCurve,
    SolveConfig,
    solve_lambda,
    sweep_x,
    verify_periods,
)
from .quadrature import IntegralSet, integral_set

__all__ = [
    "__version__",
    # Configuration
    "PeriodForgeConfig",
    "QuadratureMethod",
    "ExportFormat",
    "get_config",
    "set_config",
    "reset_config",
    # Parameters and solving
    "SurfaceParams",
    "SolveConfig",
    "PeriodReport",
    "SolutionCurve",
    "IntegralSet",
    "integral_set",
    "solve_lambda",
    "sweep_x",
    "verify_periods",
    # Exceptions
    "PeriodForgeError",
    "ConfigurationError",
    "CurveError",
    "AccuracyError",
    "SolverError",
    "BracketError",
    "LimitCheckError",
    "MeshError",
    "GeometryError",
    "SymmetryError",
    "ExportError",
]
