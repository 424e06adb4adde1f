"""Exception hierarchy for periodforge.

This module defines all custom exceptions used throughout the package,
following a clear hierarchy for better error handling and debugging.
"""

from typing import Optional


class PeriodForgeError(Exception):
    """Base exception for all periodforge errors."""

    pass


class ConfigurationError(PeriodForgeError):
    """Raised when configuration is invalid or missing."""

    pass


# Curve evaluation
class CurveError(PeriodForgeError):
    """Base exception for curve and Weierstrass data evaluation."""

    pass


class DomainError(CurveError):
    """Raised when an argument lies outside the domain of an evaluator."""

    pass


class PoleError(CurveError):
    """Raised when an expression is evaluated at one of its poles."""

    def __init__(self, factor: str, z: complex):
        self.factor = factor
        self.z = z
        super().__init__(f"Pole of '{factor}' at z={z!r}")


class ContinuationError(CurveError):
    """Raised when analytic continuation comes too close to a branch point."""

    def __init__(self, z: complex, branch_point: complex, clearance: float):
        self.z = z
        self.branch_point = branch_point
        self.clearance = clearance
        super().__init__(
            f"Path point {z!r} is within {clearance:g} of branch point "
            f"{branch_point!r}"
        )


class StepSizeError(CurveError):
    """Raised when a continuation step cannot tell the two roots apart."""

    def __init__(self, index: int, z: complex):
        self.index = index
        self.z = z
        super().__init__(
            f"Ambiguous continuation step {index} at z={z!r}; refine the path"
        )


class DegeneracyError(CurveError):
    """Raised when g has a zero or pole where dh does not vanish."""

    pass


# Quadrature
class QuadratureError(PeriodForgeError):
    """Base exception for quadrature errors."""

    pass


class AccuracyError(QuadratureError):
    """Raised when an integral does not reach the requested tolerance."""

    def __init__(self, what: str, achieved_err: float, tol: float):
        self.what = what
        self.achieved_err = achieved_err
        self.tol = tol
        super().__init__(
            f"Integral '{what}' did not converge: err={achieved_err:.3e} "
            f"> tol={tol:.3e}"
        )


# Period solving
class SolverError(PeriodForgeError):
    """Base exception for period-problem solving."""

    pass


class BracketError(SolverError):
    """Raised when no sign change of C1 - C2 is found."""

    def __init__(self, lo: float, hi: float, details: Optional[str] = None):
        self.lo = lo
        self.hi = hi
        message = f"No sign change of C1 - C2 for lambda in ({lo:g}, {hi:g})"
        if details:
            message += f": {details}"
        super().__init__(message)


class InvalidSolutionError(SolverError):
    """Raised when a root yields a non-positive c squared."""

    pass


class IndeterminateError(SolverError):
    """Raised when a denominator of c1 or c2 vanishes numerically."""

    pass


# Limit checks
class LimitCheckError(PeriodForgeError):
    """Raised when a limit report misses its frozen threshold."""

    def __init__(self, check: str, worst: str):
        self.check = check
        self.worst = worst
        super().__init__(f"Limit check '{check}' failed: {worst}")


# Meshes
class MeshError(PeriodForgeError):
    """Base exception for mesh construction errors."""

    pass


class GeometryError(MeshError):
    """Raised when the domain grid cannot be built as requested."""

    pass


class SymmetryError(MeshError):
    """Raised when a symmetry weld or cycle closure exceeds its tolerance."""

    def __init__(self, what: str, residual: float, tol: float):
        self.what = what
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"{what} residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )


class ExportError(PeriodForgeError):
    """Raised when writing or reading a mesh file fails."""

    def __init__(self, path: str, original_error: Exception):
        self.path = path
        self.original_error = original_error
        super().__init__(f"Mesh I/O failed for '{path}': {str(original_error)}")
