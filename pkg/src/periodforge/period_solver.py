"""Period problem of the CL family solved by continuation from x = 0.

For fixed rho the end position is ybar(x) = x e^{i rho} / (e^{i rho} + i lambda).
At each small x the solver looks for lambda with C1 = C2, where
C_k = x lambda c_k are the scaled candidates for c^2, then sets c = sqrt(c1).
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import optimize

from .core.config import get_config
from .core.exceptions import (
    AccuracyError,
    BracketError,
    CurveError,
    DomainError,
    IndeterminateError,
    InvalidSolutionError,
    PeriodForgeError,
    SolverError,
)
from .core.params import SurfaceParams
from .curve import (
    _D,
    _P,
    branch_points,
    continue_root,
    eval_r2,
    forms_from_root,
    residue_dh,
    residue_on_solution_curve,
)
from .quadrature import (
    IntegralSet,
    integral_set,
    integrate_desingularized,
    integrate_path,
    integrate_smooth,
    path_for,
)

logger = logging.getLogger(__name__)

# Boundary arcs of the lower half disk, in traversal order 0 -> x -> 1 -> -i -> -1 -> 0.
BOUNDARY_ARCS: Tuple[str, ...] = ("S-L", "L-A", "A-E", "E-S")

# Denominators of c1, c2 below this multiple of their error are indeterminate.
_INDETERMINATE_FACTOR = 1e3
_WARM_START_WIDTH = 1.25
_CONTINUATION_STEPS = 400


class SolveConfig(BaseModel):
    """Inputs of one lambda solve."""

    rho: float = Field(0.0, gt=-math.pi / 2, le=0.0)
    x: float = Field(..., gt=0.0, lt=1.0)
    lambda_bracket: Optional[Tuple[float, float]] = Field(
        None, description="Explicit bracket; scanned from the config range when unset"
    )
    tol_root: float = Field(default_factory=lambda: get_config().root_tol, gt=0)
    tol_quad: float = Field(default_factory=lambda: get_config().quad_tol, gt=0)
    max_iter: int = Field(default_factory=lambda: get_config().max_iter, ge=1)

    @model_validator(mode="after")
    def check_bracket(self) -> "SolveConfig":
        if self.lambda_bracket is not None:
            lo, hi = self.lambda_bracket
            if not 1.0 < lo < hi:
                raise ValueError(f"lambda bracket must satisfy 1 < lo < hi, got ({lo}, {hi})")
        return self

    def at(self, x: float, bracket: Optional[Tuple[float, float]] = None) -> "SolveConfig":
        return self.model_copy(update={"x": x, "lambda_bracket": bracket})


@dataclass
class PeriodReport:
    """Period-closure diagnostics of one parameter tuple."""

    period_residuals: Tuple[float, float, float]
    residue_reality: float
    c1: float
    c2: float
    alpha_consistency: float
    contributions: Dict[str, Tuple[float, float, float]] = field(default_factory=dict)

    def max_period_residual(self) -> float:
        return max(abs(v) for v in self.period_residuals)

    def passed(self, tol: Optional[float] = None) -> bool:
        tol = get_config().verify_tol if tol is None else tol
        return self.max_period_residual() < tol and self.residue_reality < tol

    def to_record(self) -> Dict[str, float]:
        p1, p2, p3 = self.period_residuals
        return {
            "p1": p1,
            "p2": p2,
            "p3": p3,
            "residue": self.residue_reality,
            "alpha_consistency": self.alpha_consistency,
        }


@dataclass
class ControlParameters:
    """Logarithmic growth of the ends and the rectangle ratio."""

    growth: float
    ratio: float


@dataclass
class SolutionCurve:
    """Solved tuples along an x-grid, possibly truncated by a failure."""

    points: List[SurfaceParams] = field(default_factory=list)
    truncated_at: Optional[float] = None
    reason: Optional[str] = None

    def __iter__(self) -> Iterator[SurfaceParams]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, index: int) -> SurfaceParams:
        return self.points[index]

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None


# ---------------------------------------------------------------------------
# parametrization


def in_lower_half_disk(z: complex) -> bool:
    return abs(z) <= 1.0 and z.imag <= 0.0


def ybar_of(x: float, rho: float, lam: float) -> complex:
    """End position ybar(x) = x e^{i rho} / (e^{i rho} + i lambda)."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x}")
    if not lam > 1.0:
        raise DomainError(f"lambda must exceed 1, got {lam}")
    a = cmath.exp(1j * rho)
    ybar = x * a / (a + 1j * lam)
    if not in_lower_half_disk(ybar):
        logger.warning(
            f"ybar={ybar:.6g} lies outside the lower half disk for x={x}, "
            f"rho={rho}, lambda={lam}"
        )
    return ybar


def alpha_closed_form(y: complex) -> float:
    """alpha with cos(alpha) = 2 Re{y} / (1 + |y|^2)."""
    return math.acos(2.0 * y.real / (1.0 + abs(y) ** 2))


def solve_alpha(params: SurfaceParams, tol: Optional[float] = None) -> float:
    """alpha from the ratio of the two arc integrals.

    Args:
        params: Tuple whose y is used; its alpha is ignored.
        tol: Quadrature tolerance, the configured default when omitted.

    Returns:
        alpha in (0, pi)

    Raises:
        InvalidSolutionError: If the ratio falls outside (-1, 1)
    """
    num, _ = integrate_path(params, path_for("A_num", params), tol)
    den, _ = integrate_path(params, path_for("A_den", params), tol)
    if den <= 0.0:
        raise InvalidSolutionError(f"Alpha denominator is not positive: {den:g}")
    ratio = num / den
    if not -1.0 < ratio < 1.0:
        raise InvalidSolutionError(f"cos(alpha) ratio {ratio:g} lies outside (-1, 1)")
    return math.acos(ratio)


def params_for(
    x: float, rho: float, lam: float, c: float = 1.0, tol: Optional[float] = None
) -> SurfaceParams:
    """Tuple along the ybar(x) family with alpha solved from the arc integrals."""
    y = ybar_of(x, rho, lam).conjugate()
    trial = SurfaceParams(x=x, y=y, rho=rho, lam=lam, c=c)
    return trial.replace(alpha=solve_alpha(trial, tol))


# ---------------------------------------------------------------------------
# c candidates


def c_candidates(integrals: IntegralSet) -> Tuple[float, float]:
    """(c1, c2) from a precomputed integral set."""
    den1 = integrals.I4 - integrals.I3
    den2 = integrals.I7 - integrals.I8
    err = integrals.err
    if abs(den1) <= _INDETERMINATE_FACTOR * (err.get("I3", 0.0) + err.get("I4", 0.0)):
        raise IndeterminateError(f"Denominator I4 - I3 = {den1:g} vanishes numerically")
    if abs(den2) <= _INDETERMINATE_FACTOR * (err.get("I7", 0.0) + err.get("I8", 0.0)):
        raise IndeterminateError(f"Denominator I7 - I8 = {den2:g} vanishes numerically")
    c1 = (integrals.I1 + integrals.I2) / den1
    c2 = (integrals.I5 - integrals.I6) / den2
    return c1, c2


def compute_c1_c2(params: SurfaceParams, tol: Optional[float] = None) -> Tuple[float, float]:
    """Both candidate values of c^2 for the given x, y and alpha."""
    return c_candidates(integral_set(params, tol))


def period_gap(x: float, rho: float, lam: float, tol: Optional[float] = None) -> float:
    """h(lambda) = C1 - C2 with C_k = x lambda c_k."""
    params = params_for(x, rho, lam, tol=tol)
    c1, c2 = compute_c1_c2(params, tol)
    return x * lam * (c1 - c2)


def find_lambda_bracket(
    x: float,
    rho: float,
    lo: Optional[float] = None,
    hi: Optional[float] = None,
    points: Optional[int] = None,
    tol: Optional[float] = None,
) -> Tuple[float, float]:
    """First sign change of h on a geometric lambda grid.

    Grid points where h cannot be evaluated are skipped.

    Raises:
        BracketError: If no sign change is found
    """
    config = get_config()
    lo = config.lambda_scan_lo if lo is None else lo
    hi = config.lambda_scan_hi if hi is None else hi
    points = config.lambda_scan_points if points is None else points

    prev: Optional[Tuple[float, float]] = None
    for lam in np.geomspace(lo, hi, points):
        lam = float(lam)
        try:
            h = period_gap(x, rho, lam, tol)
        except (CurveError, SolverError, AccuracyError, ValueError) as e:
            logger.debug(f"Skipping lambda={lam:g} in scan: {e}")
            continue
        if prev is not None and np.sign(h) != np.sign(prev[1]):
            logger.debug(f"Bracket ({prev[0]:g}, {lam:g}) at x={x:g}, rho={rho:g}")
            return prev[0], lam
        prev = (lam, h)
    raise BracketError(lo, hi, f"x={x:g}, rho={rho:g}")


def solve_lambda(config: SolveConfig) -> SurfaceParams:
    """Solve C1(lambda) = C2(lambda) at fixed x and rho.

    Args:
        config: x, rho, optional bracket and tolerances

    Returns:
        Solved tuple with c = sqrt(c1)

    Raises:
        BracketError: If the bracket holds no sign change
        InvalidSolutionError: If the root gives c^2 <= 0
    """
    x, rho, tol = config.x, config.rho, config.tol_quad
    if config.lambda_bracket is None:
        lo, hi = find_lambda_bracket(x, rho, tol=tol)
    else:
        lo, hi = config.lambda_bracket
        h_lo = period_gap(x, rho, lo, tol)
        h_hi = period_gap(x, rho, hi, tol)
        if np.sign(h_lo) == np.sign(h_hi):
            raise BracketError(lo, hi, f"h={h_lo:g} and {h_hi:g} at x={x:g}")

    lam = optimize.brentq(
        lambda value: period_gap(x, rho, value, tol),
        lo,
        hi,
        xtol=config.tol_root,
        maxiter=config.max_iter,
    )
    params = params_for(x, rho, lam, tol=tol)
    c1, c2 = compute_c1_c2(params, tol)
    if c1 <= 0.0 or c2 <= 0.0:
        raise InvalidSolutionError(f"Root lambda={lam:g} gives c^2 candidates {c1:g}, {c2:g}")
    solved = params.replace(c=math.sqrt(c1))
    logger.info(
        f"Solved x={x:g}, rho={rho:g}: lambda={lam:.12g}, c={solved.c:.12g}, "
        f"C1-C2={x * lam * (c1 - c2):.3e}"
    )
    return solved


# ---------------------------------------------------------------------------
# period closure


def _indent_radius(params: SurfaceParams) -> float:
    others = [b for b in branch_points(params) if b != complex(params.x)]
    return 0.25 * min([abs(b - params.x) for b in others] + [1.0 - params.x])


def boundary_root_phases(params: SurfaceParams) -> Dict[str, complex]:
    """Phase of the regular root r on each boundary arc.

    r is positive on (0, x); continuation past x runs on a small half circle
    below the axis, then along the boundary of the lower half disk.
    """
    x = params.x
    delta = _indent_radius(params)
    n = _CONTINUATION_STEPS
    theta = np.linspace(math.pi, 2.0 * math.pi, n)
    # dense near s = 0 where x and 1/x pinch the circle for x close to 1
    s = np.unique(np.concatenate([np.linspace(0.0, math.pi, 2 * n), np.linspace(0.0, 20.0 * (1.0 - x), n)]))
    legs = [
        np.linspace(0.5 * x, x - delta, n),
        x + delta * np.exp(1j * theta),
        np.linspace(x + delta, 1.0, n),
        np.exp(-1j * s),
        np.linspace(-1.0, -0.5, n),
    ]
    path = np.concatenate(legs).astype(complex)
    start = cmath.sqrt(eval_r2(params, complex(0.5 * x)))
    roots = continue_root(lambda z: eval_r2(params, z), path, start)

    def phase_at(z: complex) -> complex:
        i = int(np.argmin(np.abs(path - z)))
        p = roots[i] / abs(roots[i])
        return complex(round(p.real), round(p.imag))

    return {
        "S-L": 1.0 + 0j,
        "L-A": phase_at(0.5 * (x + 1.0)),
        "A-E": phase_at(-1j),
        "E-S": phase_at(-0.75),
    }


def _root_on(params: SurfaceParams, z, phase: complex):
    return phase * np.sqrt(np.abs(_P(params, z) / (z * _D(params, z))))


def boundary_periods(
    params: SurfaceParams, tol: Optional[float] = None
) -> Dict[str, Tuple[float, float, float]]:
    """Signed contributions of each boundary arc to Re of the phi_k integrals."""
    phases = boundary_root_phases(params)
    segments = {"S-L": (0.0, params.x), "L-A": (params.x, 1.0), "E-S": (-1.0, 0.0)}
    result: Dict[str, Tuple[float, float, float]] = {}

    for name, (a, b) in segments.items():
        phase = phases[name]
        values = []
        for k in range(3):
            f = lambda t, k=k: float(  # noqa: E731
                forms_from_root(params, t, _root_on(params, t, phase))[k].real
            )
            values.append(integrate_desingularized(f, a, b, tol)[0])
        result[name] = tuple(values)

    phase = phases["A-E"]
    cuts = sorted({0.0, params.alpha, math.pi})

    def arc(s: float, k: int) -> float:
        z = cmath.exp(-1j * s)
        return float(forms_from_root(params, z, _root_on(params, z, phase), -1j * z)[k].real)

    result["A-E"] = tuple(
        integrate_smooth(lambda s, k=k: arc(s, k), cuts, tol)[0] for k in range(3)
    )
    return {name: result[name] for name in BOUNDARY_ARCS}


def verify_periods(params: SurfaceParams, tol: Optional[float] = None) -> PeriodReport:
    """Period residuals over the boundary of the lower half disk.

    The loop encloses ybar, so the vertical residual equals
    Re(2 pi i Res(dh, ybar)) up to orientation.
    """
    contributions = boundary_periods(params, tol)
    totals = np.sum([contributions[name] for name in BOUNDARY_ARCS], axis=0)
    c1, c2 = compute_c1_c2(params, tol)
    report = PeriodReport(
        period_residuals=(float(totals[0]), float(totals[1]), float(totals[2])),
        residue_reality=abs((2j * math.pi * residue_dh(params)).real),
        c1=c1,
        c2=c2,
        alpha_consistency=abs(
            params.cos_alpha - 2.0 * params.y.real / (1.0 + abs(params.y) ** 2)
        ),
        contributions=contributions,
    )
    logger.debug(f"Period report at x={params.x:g}: {report.to_record()}")
    return report


def growth_and_ratio(params: SurfaceParams, tol: Optional[float] = None) -> ControlParameters:
    """Growth l = Res(dh, ybar) and ratio q = (I1 + c^2 I3) / (I6 + c^2 I7)."""
    integrals = integral_set(params, tol)
    c2 = params.c ** 2
    return ControlParameters(
        growth=residue_on_solution_curve(params.y),
        ratio=(integrals.I1 + c2 * integrals.I3) / (integrals.I6 + c2 * integrals.I7),
    )


def sweep_x(rho: float, x_grid: Sequence[float], config: Optional[SolveConfig] = None) -> SolutionCurve:
    """Solve along an ascending x-grid, warm-starting each bracket.

    A failure at the first grid point is raised; later failures truncate
    the curve.
    """
    curve = SolutionCurve()
    if len(x_grid) == 0:
        return curve
    if any(b <= a for a, b in zip(x_grid[:-1], x_grid[1:])):
        raise DomainError("x_grid must be strictly ascending")
    base = config or SolveConfig(x=x_grid[0], rho=rho)
    base = base.model_copy(update={"rho": rho})

    for i, x in enumerate(x_grid):
        try:
            if curve.points:
                lam = curve.points[-1].lam
                bracket = (max(1.0 + 1e-9, lam / _WARM_START_WIDTH), lam * _WARM_START_WIDTH)
                try:
                    solved = solve_lambda(base.at(x, bracket))
                except BracketError:
                    logger.debug(f"Warm start failed at x={x:g}, rescanning")
                    solved = solve_lambda(base.at(x))
            else:
                solved = solve_lambda(base.at(x, base.lambda_bracket))
        except PeriodForgeError as e:
            if i == 0:
                raise
            curve.truncated_at = float(x)
            curve.reason = str(e)
            logger.warning(f"Sweep truncated at x={x:g}: {e}")
            break
        curve.points.append(solved)
        logger.info(f"Sweep point {i + 1}/{len(x_grid)}: x={x:g}, lambda={solved.lam:.10g}")
    return curve
