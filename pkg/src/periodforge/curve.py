"""Hyperelliptic curve and Weierstrass data of the CL surfaces.

The curve is w^2 = N(Z) / ((Z - X)(Z - 2 cos a)^2) with Z = z + 1/z and
N(Z) = Z^2 - 2 Re{Y} Z + |Y|^2. All evaluators work on the z-polynomial
forms

    P(z) = z^2 N(Z),  D(z) = z (Z - X),  E(z) = z (Z - 2 cos a)

so nothing overflows near z = 0. The quantity r = w E / z satisfies
r^2 = P / (z D); it has the branch points of w but no pole at e^{+-ia},
and every product w dh, dh / w is evaluated through r in cancelled form.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core.config import get_config
from .core.exceptions import (
    ContinuationError,
    DegeneracyError,
    DomainError,
    PoleError,
    StepSizeError,
)
from .core.params import SurfaceParams

logger = logging.getLogger(__name__)

# Relative size below which a factor counts as vanishing.
_POLE_EPS = 1e-14
_AMBIGUITY_RTOL = 1e-6
_START_RTOL = 1e-8


@dataclass(frozen=True)
class SheetPoint:
    """A point (z, w) of the double cover with its sheet tag.

    ``branch`` is +1 when w is the principal square root of w^2 at z and
    -1 for its negative.
    """

    z: complex
    w: complex
    branch: int


@dataclass(frozen=True)
class FormSample:
    """Weierstrass data and forms at a point, against a tangent dz."""

    dh: complex
    g: complex
    phi1: complex
    phi2: complex
    phi3: complex


# ---------------------------------------------------------------------------
# polynomial building blocks (numpy-friendly, no pole checks)


def _P(params: SurfaceParams, z):
    Y = params.Y
    s = z * z + 1.0
    return s * s - 2.0 * Y.real * z * s + abs(Y) ** 2 * z * z


def _D(params: SurfaceParams, z):
    return z * z - params.X * z + 1.0


def _E(params: SurfaceParams, z):
    return z * z - 2.0 * params.cos_alpha * z + 1.0


def _is_zero(value: complex, scale: float = 1.0) -> bool:
    return abs(value) <= _POLE_EPS * max(1.0, scale)


def eval_Z(z: complex) -> complex:
    """Return Z = z + 1/z."""
    if z == 0:
        raise DomainError("Z = z + 1/z has a pole at z = 0")
    return z + 1.0 / z


def eval_w2(params: SurfaceParams, z: complex) -> complex:
    """Right-hand side of the curve equation at z."""
    if z == 0:
        raise DomainError("w^2 is evaluated away from z = 0")
    D = _D(params, z)
    E = _E(params, z)
    scale = abs(z) ** 2 + 1.0
    if _is_zero(D, scale):
        raise PoleError("Z - X", z)
    if _is_zero(E, scale):
        raise PoleError("Z - 2cos(alpha)", z)
    return complex(z * _P(params, z) / (D * E * E))


def eval_r2(params: SurfaceParams, z: complex) -> complex:
    """Square of the pole-free root r = w E / z, i.e. N(Z) / (Z - X)."""
    if z == 0:
        raise PoleError("1/z", z)
    D = _D(params, z)
    if _is_zero(D, abs(z) ** 2 + 1.0):
        raise PoleError("Z - X", z)
    return complex(_P(params, z) / (z * D))


def eval_regular_root(params: SurfaceParams, z: complex) -> complex:
    """Principal root r of N(Z) / (Z - X); positive on (0, x)."""
    return cmath.sqrt(eval_r2(params, z))


def branch_points(params: SurfaceParams) -> List[complex]:
    """Finite branch points 0, x, 1/x, y, 1/y, ybar, 1/ybar (infinity is the eighth)."""
    y, yb = params.y, params.ybar
    return [0j, complex(params.x), complex(1.0 / params.x), y, 1.0 / y, yb, 1.0 / yb]


def poles_of_w2(params: SurfaceParams) -> List[complex]:
    """Double poles of w^2 on the unit circle (not branch points)."""
    p = params.p
    return [p, p.conjugate()]


def default_clearance(params: SurfaceParams) -> float:
    """Clearance delta scaled by the closest pair of special points."""
    pts = branch_points(params) + poles_of_w2(params)
    scale = min(
        abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1 :] if a != b
    )
    return get_config().branch_clearance * scale


def principal_branch(w2: complex, w: complex) -> int:
    root = cmath.sqrt(w2)
    return 1 if abs(w - root) <= abs(w + root) else -1


def continue_root(
    square,
    path: Sequence[complex],
    start: complex,
    avoid: Iterable[complex] = (),
    clearance: float = 0.0,
) -> List[complex]:
    """Continue a square root of ``square(z)`` along a polyline.

    Each step keeps whichever of the two roots is closest to the previous
    value.
    """
    avoid = list(avoid)
    values: List[complex] = []
    prev: Optional[complex] = None
    for index, z in enumerate(path):
        for b in avoid:
            if abs(z - b) < clearance:
                raise ContinuationError(z, b, clearance)
        root = cmath.sqrt(square(z))
        if prev is None:
            target = start
        else:
            target = prev
        d_plus = abs(root - target)
        d_minus = abs(root + target)
        if prev is not None and abs(d_plus - d_minus) <= _AMBIGUITY_RTOL * max(
            d_plus, d_minus
        ):
            raise StepSizeError(index, z)
        value = root if d_plus <= d_minus else -root
        if prev is None:
            value = start
        values.append(value)
        prev = value
    return values


def continue_root_array(squares: np.ndarray) -> np.ndarray:
    """Continue a square root along each row of sampled squares.

    Rows are paths; the returned roots agree with the principal root in
    the first column and vary continuously along every row.
    """
    squares = np.atleast_2d(np.asarray(squares, dtype=complex))
    roots = np.sqrt(squares)
    overlap = (roots[:, 1:] * np.conj(roots[:, :-1])).real
    scale = np.abs(roots[:, 1:]) * np.abs(roots[:, :-1])
    if np.any(np.abs(overlap) <= _AMBIGUITY_RTOL * scale):
        row, col = np.argwhere(np.abs(overlap) <= _AMBIGUITY_RTOL * scale)[0]
        raise StepSizeError(int(col) + 1, complex(squares[row, col + 1]))
    flips = np.cumprod(np.where(overlap < 0.0, -1.0, 1.0), axis=1)
    roots[:, 1:] *= flips
    return roots


def continue_w(
    params: SurfaceParams,
    path: Sequence[complex],
    w_start: complex,
    clearance: Optional[float] = None,
) -> List[SheetPoint]:
    """Analytic continuation of w along a polyline of z-values."""
    if len(path) == 0:
        return []
    w2_start = eval_w2(params, path[0])
    if abs(w_start * w_start - w2_start) > _START_RTOL * max(1.0, abs(w2_start)):
        raise DomainError(
            f"w_start^2 = {w_start * w_start!r} does not match w^2 = {w2_start!r}"
        )
    delta = default_clearance(params) if clearance is None else clearance
    avoid = branch_points(params) + poles_of_w2(params)
    square = lambda z: eval_w2(params, z)  # noqa: E731
    values = continue_root(square, path, w_start, avoid, delta)
    points = [
        SheetPoint(z=complex(z), w=w, branch=principal_branch(eval_w2(params, z), w))
        for z, w in zip(path, values)
    ]
    logger.debug(f"Continued w over {len(points)} points, final w={values[-1]!r}")
    return points


def principal_w(params: SurfaceParams, z: complex) -> complex:
    """w on the principal sheet for z in (0, x), where w > 0."""
    if not 0.0 < z.real < params.x or z.imag != 0:
        raise DomainError(f"Principal sheet is normalized on (0, x), got z={z!r}")
    return complex(math.sqrt(eval_w2(params, z).real))


def eval_dh(params: SurfaceParams, z: complex) -> complex:
    """Coefficient h'(z) with dh = h'(z) dz; equals -i at z = 0."""
    P = _P(params, z)
    if _is_zero(P, abs(z) ** 4 + 1.0):
        raise PoleError("N(Z)", z)
    return complex(-1j * _E(params, z) / P)


def eval_forms(
    params: SurfaceParams, p: SheetPoint, dz: complex = 1.0
) -> FormSample:
    """g = i c w and the three Weierstrass forms against dz."""
    dh = eval_dh(params, p.z) * dz
    w = p.w
    if w == 0 or not cmath.isfinite(w):
        if not _is_zero(dh):
            raise DegeneracyError(f"g has a zero or pole at z={p.z!r} where dh != 0")
        raise DomainError(f"z={p.z!r} is not a regular point")
    g = 1j * params.c * w
    return FormSample(
        dh=dh,
        g=g,
        phi1=0.5 * (1.0 / g - g) * dh,
        phi2=0.5 * (1j / g + 1j * g) * dh,
        phi3=dh,
    )


def forms_from_root(params: SurfaceParams, z, r, dz=1.0):
    """phi1, phi2, phi3 against dz from the pole-free root r (vectorized).

    Uses w dh = -i r z dz / P and dh / w = -i E^2 dz / (P r z).
    """
    P = _P(params, z)
    E = _E(params, z)
    w_dh = -1j * r * z * dz / P
    dh_w = -1j * E * E * dz / (P * r * z)
    c = params.c
    phi1 = 0.5 * (-1j * dh_w / c - 1j * c * w_dh)
    phi2 = 0.5 * (dh_w / c - c * w_dh)
    phi3 = -1j * E * dz / P
    return phi1, phi2, phi3


def w_from_root(params: SurfaceParams, z, r):
    return r * z / _E(params, z)


def root_from_w(params: SurfaceParams, z, w):
    return w * _E(params, z) / z


def gauss_normal(g) -> np.ndarray:
    """Unit normal from the stereographic image g."""
    g = np.asarray(g, dtype=complex)
    m = np.abs(g) ** 2
    return np.stack(
        [2.0 * g.real / (m + 1.0), 2.0 * g.imag / (m + 1.0), (m - 1.0) / (m + 1.0)],
        axis=-1,
    )


def residue_dh(params: SurfaceParams) -> complex:
    """Residue of dh at z = ybar, (Ybar - 2cos a) / (2 (ybar - 1/ybar) Im Y)."""
    yb = params.ybar
    Y = params.Y
    return (Y.conjugate() - 2.0 * params.cos_alpha) / (
        2.0 * (yb - 1.0 / yb) * Y.imag
    )


def residue_on_solution_curve(y: complex) -> float:
    """Residue at ybar once cos a = 2 Re y / (1 + |y|^2) holds.

    Substituting that relation into the general residue gives
    -(1 - |y|^2) / ((1 + |y|^2) 2 Im Y), a positive number.
    """
    Y = y + 1.0 / y
    m = abs(y) ** 2
    return -(1.0 - m) / ((1.0 + m) * 2.0 * Y.imag)


def printed_residue_form(y: complex) -> float:
    """The expression (1 - |y|^2) / (2 Im Y); off by a factor -(1 + |y|^2)."""
    Y = y + 1.0 / y
    return (1.0 - abs(y) ** 2) / (2.0 * Y.imag)


def contour_residue(
    params: SurfaceParams, center: complex, radius: float, n: int = 256
) -> complex:
    """(1 / 2 pi i) times the trapezoidal contour integral of dh around center."""
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    z = center + radius * np.exp(1j * t)
    h = -1j * _E(params, z) / _P(params, z)
    dz = 1j * (z - center)
    return complex(np.mean(h * dz) / 1j)


def eval_limit_data_x0(
    lam: float, rho: float, C: float, zeta: complex
) -> Tuple[complex, complex]:
    """Limit data (G^2, dH coefficient) of the x -> 0 limit in the zeta chart."""
    a = cmath.exp(1j * rho)
    b = -cmath.exp(-1j * rho)
    for pole, name in ((-1j * lam, "zeta + i lambda"), (a, "zeta - e^{i rho}"), (b, "zeta + e^{-i rho}")):
        if _is_zero(zeta - pole, abs(pole)):
            raise PoleError(name, zeta)
    G2 = 1j * C * C * zeta * (zeta - a) * (zeta - b) / (zeta + 1j * lam) ** 2
    dH = 1.0 / ((zeta - a) * (zeta - b))
    return complex(G2), complex(dH)


def eval_scaled_data(params: SurfaceParams, C: float, zeta: complex) -> Tuple[complex, complex]:
    """Finite-x counterpart of the x -> 0 limit data.

    z = x zeta / (zeta + i lambda), G^2 = -C^2 w^2 / (x lambda) and
    dH = (lambda / x) h'(z) dz/dzeta.
    """
    if params.lam is None:
        raise DomainError("Scaled data needs the lambda of the tuple")
    lam, x = params.lam, params.x
    if _is_zero(zeta + 1j * lam, lam):
        raise PoleError("zeta + i lambda", zeta)
    z = x * zeta / (zeta + 1j * lam)
    G2 = -C * C * eval_w2(params, z) / (x * lam)
    dz_dzeta = x * 1j * lam / (zeta + 1j * lam) ** 2
    dH = lam / x * eval_dh(params, z) * dz_dzeta
    return complex(G2), complex(dH)


def eval_limit_data_x1(
    y: complex, alpha: float, c: float, z: complex
) -> Tuple[complex, complex]:
    """Limit data (g^2, dh coefficient) as x -> 1, i.e. X replaced by 2."""
    if z == 0:
        raise DomainError("x -> 1 limit data is evaluated away from z = 0")
    Y = y + 1.0 / y
    Z = z + 1.0 / z
    N = Z * Z - 2.0 * Y.real * Z + abs(Y) ** 2
    scale = abs(Z) + 1.0
    if _is_zero(Z - 2.0, scale):
        raise PoleError("Z - 2", z)
    if _is_zero(Z - 2.0 * math.cos(alpha), scale):
        raise PoleError("Z - 2cos(alpha)", z)
    if _is_zero(N, abs(Z) ** 2 + 1.0):
        raise PoleError("N(Z)", z)
    g2 = -c * c * N / ((Z - 2.0) * (Z - 2.0 * math.cos(alpha)) ** 2)
    dh = -1j * (Z - 2.0 * math.cos(alpha)) / (z * N)
    return complex(g2), complex(dh)
