"""Modulus integrals I1..I8 and the alpha-defining integrals.

All densities are written with the pole-free root r of the curve module:

    |w dh| = |r z / P|,    |dh / w| = |E^2 / (P r z)|,    |r|^2 = |P / (z D)|

so |w| never has to be tracked through a sign and the cancellation at
z = e^{+-ia} is exact. Real-segment integrals are split at their midpoint and
each half is mapped by t = a + (m - a) u^2, which turns the inverse square
root behaviour at branch-point endpoints into a smooth integrand.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import mpmath
from scipy import integrate

from .core.config import QuadratureMethod, get_config
from .core.exceptions import AccuracyError, DomainError
from .core.params import SurfaceParams

logger = logging.getLogger(__name__)


class PathKind(str, Enum):
    REAL_SEGMENT = "real_segment"
    UNIT_CIRCLE_ARC = "unit_circle_arc"


class Integrand(str, Enum):
    ABS_DH_OVER_W = "abs_dh_over_w"
    ABS_W_DH = "abs_w_dh"
    DH_PLAIN = "dh_plain"
    DH_COS_WEIGHT = "dh_cos_weight"


@dataclass(frozen=True)
class PathSpec:
    """An integration contour together with the density integrated on it.

    Real segments take endpoints in [-1, 1]; arcs take angles in [0, pi]
    on z = e^{it}.
    """

    kind: PathKind
    a: float
    b: float
    integrand: Integrand

    def __post_init__(self):
        if self.a > self.b:
            raise DomainError(f"Path endpoints must satisfy a <= b, got ({self.a}, {self.b})")
        if self.kind == PathKind.REAL_SEGMENT:
            if self.a < -1.0 or self.b > 1.0:
                raise DomainError("Real segments must lie in [-1, 1]")
            if self.integrand in (Integrand.DH_PLAIN, Integrand.DH_COS_WEIGHT):
                raise DomainError(f"{self.integrand.value} is defined on the arc only")
        elif self.a < 0.0 or self.b > math.pi:
            raise DomainError("Arc parameters must lie in [0, pi]")

    def endpoint_exponents(self, params: SurfaceParams) -> Tuple[float, float]:
        """Local exponent of the density at each endpoint (-1/2 or 0 or +1/2)."""
        if self.kind != PathKind.REAL_SEGMENT:
            return (0.0, 0.0)

        def exponent(t: float) -> float:
            if t == 0.0:
                return -0.5 if self.integrand == Integrand.ABS_DH_OVER_W else 0.5
            if t == params.x:
                return -0.5 if self.integrand == Integrand.ABS_W_DH else 0.5
            return 0.0

        return (exponent(self.a), exponent(self.b))


@dataclass
class IntegralSet:
    """Values of I1..I8 and the two alpha integrals, with error estimates."""

    I1: float
    I2: float
    I3: float
    I4: float
    I5: float
    I6: float
    I7: float
    I8: float
    A_num: float
    A_den: float
    err: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in INTEGRAL_NAMES}

    @property
    def cos_alpha(self) -> float:
        return self.A_num / self.A_den


# name -> (kind, endpoints from params, integrand)
_INTEGRAL_TABLE: Dict[str, Callable[[SurfaceParams], PathSpec]] = {
    "I1": lambda p: PathSpec(PathKind.REAL_SEGMENT, 0.0, p.x, Integrand.ABS_DH_OVER_W),
    "I2": lambda p: PathSpec(PathKind.UNIT_CIRCLE_ARC, 0.0, math.pi, Integrand.ABS_DH_OVER_W),
    "I3": lambda p: PathSpec(PathKind.REAL_SEGMENT, 0.0, p.x, Integrand.ABS_W_DH),
    "I4": lambda p: PathSpec(PathKind.UNIT_CIRCLE_ARC, 0.0, math.pi, Integrand.ABS_W_DH),
    "I5": lambda p: PathSpec(PathKind.REAL_SEGMENT, -1.0, 0.0, Integrand.ABS_DH_OVER_W),
    "I6": lambda p: PathSpec(PathKind.REAL_SEGMENT, p.x, 1.0, Integrand.ABS_DH_OVER_W),
    "I7": lambda p: PathSpec(PathKind.REAL_SEGMENT, p.x, 1.0, Integrand.ABS_W_DH),
    "I8": lambda p: PathSpec(PathKind.REAL_SEGMENT, -1.0, 0.0, Integrand.ABS_W_DH),
    "A_num": lambda p: PathSpec(PathKind.UNIT_CIRCLE_ARC, 0.0, math.pi, Integrand.DH_COS_WEIGHT),
    "A_den": lambda p: PathSpec(PathKind.UNIT_CIRCLE_ARC, 0.0, math.pi, Integrand.DH_PLAIN),
}

INTEGRAL_NAMES: Tuple[str, ...] = tuple(_INTEGRAL_TABLE)


def path_for(name: str, params: SurfaceParams) -> PathSpec:
    """PathSpec of a named integral."""
    try:
        return _INTEGRAL_TABLE[name](params)
    except KeyError:
        raise DomainError(
            f"Unknown integral '{name}'. Known integrals: {', '.join(INTEGRAL_NAMES)}"
        )


# ---------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class _Coeffs:
    X: float
    re_Y: float
    abs_Y2: float
    cos_a: float

    @classmethod
    def of(cls, params: SurfaceParams) -> "_Coeffs":
        Y = params.Y
        return cls(params.X, Y.real, abs(Y) ** 2, params.cos_alpha)


def _modulus(k: _Coeffs, z, integrand: Integrand, sqrt):
    s = z * z + 1
    P = s * s - 2 * k.re_Y * z * s + k.abs_Y2 * z * z
    absP = abs(P)
    abs_r = sqrt(absP / abs(z * (z * z - k.X * z + 1)))
    if integrand == Integrand.ABS_W_DH:
        return abs_r * abs(z) / absP
    E = z * z - 2 * k.cos_a * z + 1
    return abs(E) ** 2 / (absP * abs_r * abs(z))


def _arc_weight(k: _Coeffs, ct, integrand: Integrand):
    q = 4 * ct * ct - 4 * k.re_Y * ct + k.abs_Y2
    return ct / q if integrand == Integrand.DH_COS_WEIGHT else 1 / q


def _density(params: SurfaceParams, spec: PathSpec, extended: bool = False):
    """Density in the path parameter t, for floats or mpmath numbers."""
    k = _Coeffs.of(params)
    if extended:
        sqrt, cos, sin = mpmath.sqrt, mpmath.cos, mpmath.sin
        mk = lambda c, s: mpmath.mpc(c, s)  # noqa: E731
    else:
        sqrt, cos, sin = math.sqrt, math.cos, math.sin
        mk = complex

    if spec.kind == PathKind.REAL_SEGMENT:
        return lambda t: _modulus(k, t, spec.integrand, sqrt)

    if spec.integrand in (Integrand.DH_PLAIN, Integrand.DH_COS_WEIGHT):
        return lambda t: _arc_weight(k, cos(t), spec.integrand)
    return lambda t: _modulus(k, mk(cos(t), sin(t)), spec.integrand, sqrt)


def _pieces(params: SurfaceParams, spec: PathSpec):
    """Subintervals as (mode, lo, hi).

    Mode "left"/"right" requests the u^2 substitution at that end of the
    interval. Arcs are cut at alpha and, for x close to 1, geometrically
    toward t = 0 where the branch points x and 1/x pinch the contour.
    """
    a, b = spec.a, spec.b
    if spec.kind == PathKind.REAL_SEGMENT:
        m = 0.5 * (a + b)
        return [("left", a, m), ("right", m, b)]

    cuts = [a, b]
    if a < params.alpha < b:
        cuts.append(params.alpha)
    gap = 1.0 - params.x
    if gap < 0.1:
        t = 4.0 * gap
        while t < min(params.alpha, b):
            if t > a:
                cuts.append(t)
            t *= 4.0
    cuts = sorted(set(cuts))
    return [("plain", lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:])]


def _mapped(f, mode: str, lo, hi):
    if mode == "left":
        span = hi - lo
        return (lambda u: f(lo + span * u * u) * 2 * span * u), 0.0, 1.0
    if mode == "right":
        span = hi - lo
        return (lambda u: f(hi - span * u * u) * 2 * span * u), 0.0, 1.0
    return f, lo, hi


# Relative target handed to QUADPACK; tiny integrals are then resolved
# relative to their size even when tol is an absolute bound.
_REL_TOL = 1e-11


def _accepted(tol: float, value: float) -> float:
    return max(tol, 100.0 * _REL_TOL * abs(value))


def _gauss_kronrod(g, lo, hi, tol: float, limit: int) -> Tuple[float, float]:
    result = integrate.quad(
        g, lo, hi, epsabs=tol, epsrel=max(_REL_TOL, min(tol, 1e-8)), limit=limit, full_output=1
    )
    return float(result[0]), float(result[1])


def _double_exponential(g, lo, hi, dps: int) -> Tuple[float, float]:
    with mpmath.workdps(dps):
        value, err = mpmath.quad(g, [lo, hi], error=True)
    return float(value), float(err)


def integrate_path(
    params: SurfaceParams,
    spec: PathSpec,
    tol: Optional[float] = None,
    method: Optional[QuadratureMethod] = None,
) -> Tuple[float, float]:
    """Integrate the density of ``spec`` along its path.

    Returns (value, err). The double-exponential mode runs mpmath's
    tanh-sinh rule on the same desingularized integrand; it is also the
    extended-precision fallback when enabled in the configuration.
    """
    config = get_config()
    tol = config.quad_tol if tol is None else tol
    method = method or config.quadrature_method
    if tol <= 0:
        raise DomainError(f"Tolerance must be positive, got {tol}")
    if spec.a == spec.b:
        return 0.0, 0.0

    extended = method == QuadratureMethod.DOUBLE_EXPONENTIAL
    f = _density(params, spec, extended=extended)
    total, total_err = 0.0, 0.0
    for mode, lo, hi in _pieces(params, spec):
        g, ulo, uhi = _mapped(f, mode, lo, hi)
        if extended:
            value, err = _double_exponential(g, ulo, uhi, config.mp_dps)
        else:
            value, err = _gauss_kronrod(g, ulo, uhi, tol, config.quad_limit)
            if err > _accepted(tol, value) and config.extended_precision:
                logger.warning(
                    f"Quadrature stagnated at err={err:.2e} on [{lo:g}, {hi:g}], "
                    "retrying in extended precision"
                )
                g_mp, ulo, uhi = _mapped(_density(params, spec, extended=True), mode, lo, hi)
                value, err = _double_exponential(g_mp, ulo, uhi, config.mp_dps)
        total += value
        total_err += err

    if not math.isfinite(total) or total_err > _accepted(tol, total):
        raise AccuracyError(
            f"{spec.integrand.value} on {spec.kind.value}({spec.a:g}, {spec.b:g})",
            total_err,
            tol,
        )
    return total, total_err


def integral_set(
    params: SurfaceParams,
    tol: Optional[float] = None,
    method: Optional[QuadratureMethod] = None,
) -> IntegralSet:
    """All of I1..I8, A_num and A_den for one parameter tuple."""
    values: Dict[str, float] = {}
    errors: Dict[str, float] = {}
    for name in INTEGRAL_NAMES:
        values[name], errors[name] = integrate_path(
            params, path_for(name, params), tol, method
        )
    logger.debug(f"Integral set at x={params.x:g}, y={params.y!r}: {values}")
    return IntegralSet(err=errors, **values)


def i7_quadratic_substitution(
    params: SurfaceParams, tol: Optional[float] = None
) -> Tuple[float, float]:
    """I7 through t = x + (1 - x^2) u^2, which removes both endpoint effects.

    Then I7 = 2 sqrt(x) * int_0^{1/sqrt(1+x)} sqrt(t) du / sqrt((1 - x u^2) Q(t))
    with Q(t) = (t^2 + 1)^2 - 2 Re{Y} (t^3 + t) + |Y|^2 t^2.
    """
    config = get_config()
    tol = config.quad_tol if tol is None else tol
    x = params.x
    k = _Coeffs.of(params)

    def g(u: float) -> float:
        t = x + (1.0 - x * x) * u * u
        Q = (t * t + 1.0) ** 2 - 2.0 * k.re_Y * (t ** 3 + t) + k.abs_Y2 * t * t
        return math.sqrt(t) / math.sqrt((1.0 - x * u * u) * Q)

    value, err = _gauss_kronrod(g, 0.0, 1.0 / math.sqrt(1.0 + x), tol, config.quad_limit)
    return 2.0 * math.sqrt(x) * value, 2.0 * math.sqrt(x) * err


def integrate_desingularized(
    f: Callable[[float], float], a: float, b: float, tol: Optional[float] = None
) -> Tuple[float, float]:
    """Integrate a real function with possible t^(-1/2) behaviour at both ends.

    Used for the signed period contributions, whose densities share the
    endpoint exponents of the modulus integrals.
    """
    config = get_config()
    tol = config.quad_tol if tol is None else tol
    if a == b:
        return 0.0, 0.0
    m = 0.5 * (a + b)
    total, total_err = 0.0, 0.0
    for mode, lo, hi in (("left", a, m), ("right", m, b)):
        g, ulo, uhi = _mapped(f, mode, lo, hi)
        value, err = _gauss_kronrod(g, ulo, uhi, tol, config.quad_limit)
        total += value
        total_err += err
    if not math.isfinite(total) or total_err > _accepted(tol, total):
        raise AccuracyError(f"signed density on ({a:g}, {b:g})", total_err, tol)
    return total, total_err


def integrate_smooth(
    f: Callable[[float], float],
    cuts: List[float],
    tol: Optional[float] = None,
) -> Tuple[float, float]:
    """Adaptive Gauss-Kronrod over consecutive intervals of ``cuts``."""
    config = get_config()
    tol = config.quad_tol if tol is None else tol
    total, total_err = 0.0, 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        value, err = _gauss_kronrod(f, lo, hi, tol, config.quad_limit)
        total += value
        total_err += err
    if not math.isfinite(total) or total_err > _accepted(tol, total):
        raise AccuracyError(f"smooth density on ({cuts[0]:g}, {cuts[-1]:g})", total_err, tol)
    return total, total_err


def segment_integral_at(
    X: float,
    Y: complex,
    cos_alpha: float,
    a: float,
    b: float,
    integrand: Integrand,
    tol: Optional[float] = None,
) -> Tuple[float, float]:
    """Modulus integral on a real segment for raw curve coefficients.

    Accepts X = 2, the x -> 1 limit that no valid tuple reaches.
    """
    if integrand not in (Integrand.ABS_DH_OVER_W, Integrand.ABS_W_DH):
        raise DomainError(f"{integrand.value} is defined on the arc only")
    k = _Coeffs(X, Y.real, abs(Y) ** 2, cos_alpha)
    return integrate_desingularized(lambda t: _modulus(k, t, integrand, math.sqrt), a, b, tol)
