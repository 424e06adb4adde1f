"""Regression oracles for the closed-form limits of the family.

Each check measures a scaled quantity along a sequence of x values that
approaches a degenerate end of the family and compares it with its
closed-form limit. Acceptance thresholds at finite x are frozen in
``THRESHOLDS``.
"""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

from .core.config import get_config
from .core.exceptions import DomainError, LimitCheckError
from .core.params import SurfaceParams
from .curve import eval_limit_data_x0, eval_scaled_data, eval_w2, residue_dh
from .period_solver import alpha_closed_form, params_for
from .quadrature import (
    Integrand,
    i7_quadratic_substitution,
    integrate_path,
    path_for,
    segment_integral_at,
)

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "periodforge.limit_report/1"
CSV_COLUMNS = ("schema", "check", "quantity", "x", "measured", "target", "abs_error", "rate")


@dataclass(frozen=True)
class Threshold:
    """Frozen acceptance rule of one measured quantity."""

    final: Optional[float] = None
    relative: bool = False
    decreasing: bool = True


# Calibrated against the measured sequences.
THRESHOLDS: Dict[str, Threshold] = {
    "sqrt(lam/x^3) I4": Threshold(final=5e-2, relative=True),
    "sqrt(lam^3/x) I2": Threshold(),
    "sqrt(x) |w| on beta": Threshold(final=1e-2, relative=True),
    "2 I7": Threshold(final=2e-2),
    "2 I6": Threshold(final=1e-2),
    "2 I7 substitution gap": Threshold(final=1e-8, decreasing=False),
    "G2 sup error": Threshold(),
    "dH sup error": Threshold(),
    "(lam/x) Res": Threshold(final=5e-2),
}

DEFAULT_TEST_SET: Tuple[complex, ...] = (
    2.0 + 1.0j,
    -2.0 + 1.0j,
    1.0 + 2.0j,
    -1.0 + 2.0j,
    3.0 + 0.5j,
    -3.0 + 0.5j,
    0.5 + 0.5j,
    2.0 - 0.5j,
    1.5j,
    -1.5 + 0.2j,
)

# Minimum distance of a test point from the excluded points of the zeta chart.
_K_CLEARANCE = 1e-2


@dataclass
class LimitRow:
    x: float
    measured: float
    target: float
    abs_error: float
    rate: Optional[float] = None


@dataclass
class LimitSeries:
    """Measurements of one quantity, ordered toward the limit point."""

    quantity: str
    target: float
    rows: List[LimitRow] = field(default_factory=list)
    threshold: Threshold = field(default_factory=Threshold)

    @classmethod
    def build(
        cls,
        quantity: str,
        target: float,
        xs: Sequence[float],
        measured: Sequence[float],
        distance: Callable[[float], float],
    ) -> "LimitSeries":
        order = sorted(range(len(xs)), key=lambda i: -distance(xs[i]))
        rows: List[LimitRow] = []
        for i in order:
            rows.append(LimitRow(xs[i], measured[i], target, abs(measured[i] - target)))
        for prev, row in zip(rows[:-1], rows[1:]):
            h0, h1 = distance(prev.x), distance(row.x)
            if prev.abs_error > 0 and row.abs_error > 0 and h0 != h1:
                row.rate = math.log(prev.abs_error / row.abs_error) / math.log(h0 / h1)
        return cls(quantity, target, rows, THRESHOLDS.get(quantity, Threshold()))

    @property
    def final_error(self) -> float:
        if not self.rows:
            return float("nan")
        err = self.rows[-1].abs_error
        if self.threshold.relative and self.target != 0:
            err /= abs(self.target)
        return err

    @property
    def rate(self) -> Optional[float]:
        return self.rows[-1].rate if self.rows else None

    def is_decreasing(self) -> bool:
        errors = [row.abs_error for row in self.rows]
        return all(b < a for a, b in zip(errors[:-1], errors[1:]))

    def failure(self) -> Optional[str]:
        """Description of the first violated rule, None when the series passes."""
        rule = self.threshold
        if rule.final is not None and not self.final_error < rule.final:
            kind = "relative" if rule.relative else "absolute"
            return (
                f"{self.quantity}: final {kind} error {self.final_error:.3e} "
                f">= {rule.final:.1e} at x={self.rows[-1].x:g}"
            )
        if rule.decreasing and not self.is_decreasing():
            errors = ", ".join(f"{row.abs_error:.3e}" for row in self.rows)
            return f"{self.quantity}: errors not decreasing ({errors})"
        return None


@dataclass
class LimitReport:
    """Outcome of one limit check."""

    check: str
    series: List[LimitSeries] = field(default_factory=list)

    def __getitem__(self, quantity: str) -> LimitSeries:
        for s in self.series:
            if s.quantity == quantity:
                return s
        raise KeyError(quantity)

    def failures(self) -> List[str]:
        return [msg for msg in (s.failure() for s in self.series) if msg is not None]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def assert_passed(self) -> None:
        failures = self.failures()
        if failures:
            raise LimitCheckError(self.check, failures[0])

    def write_csv(self, handle: TextIO) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for s in self.series:
            for row in s.rows:
                writer.writerow(
                    [
                        REPORT_SCHEMA,
                        self.check,
                        s.quantity,
                        repr(row.x),
                        repr(row.measured),
                        repr(row.target),
                        repr(row.abs_error),
                        "" if row.rate is None else repr(row.rate),
                    ]
                )


def _map_points(fn: Callable, items: Sequence) -> List:
    """Map over sequence points, in a process pool when threads allow."""
    workers = min(get_config().max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# x -> 0


def f_of_lambda(lam: float, rho: float) -> float:
    """f(lambda) = sqrt(lambda (1 + lambda^2 + 2 lambda sin rho))."""
    radicand = lam * (1.0 + lam * lam + 2.0 * lam * math.sin(rho))
    if radicand < 0.0:
        raise DomainError(f"f(lambda) is undefined at lambda={lam}, rho={rho}")
    return math.sqrt(max(radicand, 0.0))


def beta_image(x: float, t: float) -> complex:
    """z-image of the curve beta(t); lies on the unit circle, tends to e^{-it}."""
    e = complex(math.cos(t), math.sin(t))
    return (1.0 + x * e) / (x + e)


def beta_target(lam: float, rho: float, t: float, cos_alpha: float = 0.0) -> float:
    """Limit of sqrt(x) |w| at beta(t): |i lambda + e^{i rho}| / (2 |cos t - cos a|).

    Along ybar(x) the end tends to z = 0, so cos a -> 0 and the default
    gives the x -> 0 value.
    """
    gap = abs(math.cos(t) - cos_alpha)
    if gap == 0.0:
        raise DomainError(f"beta(t) meets the pole of w at t={t}, cos a={cos_alpha}")
    return abs(1j * lam + complex(math.cos(rho), math.sin(rho))) / (2.0 * gap)


def _x0_point(x: float, rho: float, lam: float, t_beta: float) -> Tuple[float, float, float]:
    params = params_for(x, rho, lam)
    # absolute tolerance well below the size of I2 ~ x^(5/2)
    tol = get_config().quad_tol * x ** 3
    I2, _ = integrate_path(params, path_for("I2", params), tol)
    I4, _ = integrate_path(params, path_for("I4", params), tol)
    w_abs = math.sqrt(abs(eval_w2(params, beta_image(x, t_beta))))
    return (
        math.sqrt(lam ** 3 / x) * I2,
        math.sqrt(lam / x ** 3) * I4,
        math.sqrt(x) * w_abs,
    )


def check_I2_I4_limits(
    rho: float, lam: float, x_seq: Sequence[float], t_beta: float = math.pi / 4
) -> LimitReport:
    """Scaled arc integrals and |w| on beta along ybar(x) as x -> 0."""
    values = _map_points(partial(_x0_point, rho=rho, lam=lam, t_beta=t_beta), list(x_seq))
    xs = list(x_seq)
    distance = lambda x: x  # noqa: E731
    target = beta_target(lam, rho, t_beta)
    report = LimitReport(
        "x0",
        [
            LimitSeries.build("sqrt(lam^3/x) I2", 0.0, xs, [v[0] for v in values], distance),
            LimitSeries.build(
                "sqrt(lam/x^3) I4", lam * math.pi / f_of_lambda(lam, rho), xs, [v[1] for v in values], distance
            ),
            LimitSeries.build("sqrt(x) |w| on beta", target, xs, [v[2] for v in values], distance),
        ],
    )
    logger.info(f"x -> 0 check at lambda={lam}, rho={rho}: {len(xs)} points")
    return report


def _wdata_point(
    x: float, rho: float, lam: float, C: float, test_set: Sequence[complex]
) -> Tuple[float, float]:
    params = params_for(x, rho, lam)
    g_err, h_err = 0.0, 0.0
    for zeta in test_set:
        G2, dH = eval_scaled_data(params, C, zeta)
        G2_lim, dH_lim = eval_limit_data_x0(lam, rho, C, zeta)
        g_err = max(g_err, abs(G2 - G2_lim))
        h_err = max(h_err, abs(dH - dH_lim))
    return g_err, h_err


def check_weierstrass_convergence(
    rho: float,
    lam: float,
    C: float,
    x_seq: Sequence[float],
    test_set: Sequence[complex] = DEFAULT_TEST_SET,
) -> LimitReport:
    """Sup-distance between scaled finite-x data and the x -> 0 limit data."""
    excluded = [
        -1j * lam,
        complex(math.cos(rho), math.sin(rho)),
        -complex(math.cos(rho), -math.sin(rho)),
        0j,
    ]
    for zeta in test_set:
        for x in x_seq:
            excluded_x = excluded + [-1j * lam / (1.0 - x * x)]
            for point in excluded_x:
                if abs(zeta - point) < _K_CLEARANCE * max(1.0, abs(point)):
                    raise DomainError(
                        f"Test point {zeta} is within the excluded neighbourhood of {point}"
                    )
    xs = list(x_seq)
    values = _map_points(
        partial(_wdata_point, rho=rho, lam=lam, C=C, test_set=list(test_set)), xs
    )
    distance = lambda x: x  # noqa: E731
    return LimitReport(
        "wdata",
        [
            LimitSeries.build("G2 sup error", 0.0, xs, [v[0] for v in values], distance),
            LimitSeries.build("dH sup error", 0.0, xs, [v[1] for v in values], distance),
        ],
    )


def check_residue_limit(rho: float, solution_curve: Sequence[SurfaceParams]) -> LimitReport:
    """(lambda / x) Res(dh, ybar) along a solved curve against sec(rho) / 2."""
    xs, measured = [], []
    for params in solution_curve:
        if params.lam is None:
            raise DomainError("Solution curve points must carry lambda")
        xs.append(params.x)
        measured.append(params.lam / params.x * residue_dh(params).real)
    target = 0.5 / math.cos(rho)
    return LimitReport(
        "residue",
        [LimitSeries.build("(lam/x) Res", target, xs, measured, lambda x: x)],
    )


# ---------------------------------------------------------------------------
# x -> 1


def x1_target(y: complex) -> float:
    """pi / |2 - Y|, the limit of 2 I7."""
    return math.pi / abs(2.0 - (y + 1.0 / y))


def _x1_point(x: float, y: complex, alpha: float) -> Tuple[float, float, float]:
    params = SurfaceParams(x=x, y=y, alpha=alpha)
    I6, _ = integrate_path(params, path_for("I6", params))
    I7, _ = integrate_path(params, path_for("I7", params))
    I7_sub, _ = i7_quadratic_substitution(params)
    return 2.0 * I6, 2.0 * I7, 2.0 * abs(I7_sub - I7)


def check_x1_limits(y: complex, x_seq: Sequence[float]) -> LimitReport:
    """2 I6 -> 0 and 2 I7 -> pi / |2 - Y| as x -> 1, alpha from the closed form."""
    alpha = alpha_closed_form(y)
    xs = list(x_seq)
    values = _map_points(partial(_x1_point, y=y, alpha=alpha), xs)
    distance = lambda x: 1.0 - x  # noqa: E731
    report = LimitReport(
        "x1",
        [
            LimitSeries.build("2 I6", 0.0, xs, [v[0] for v in values], distance),
            LimitSeries.build("2 I7", x1_target(y), xs, [v[1] for v in values], distance),
            LimitSeries.build("2 I7 substitution gap", 0.0, xs, [v[2] for v in values], distance),
        ],
    )
    logger.info(f"x -> 1 check at y={y}: {len(xs)} points")
    return report


def limit_c_at_x1(y: complex, alpha: Optional[float] = None, tol: Optional[float] = None) -> float:
    """c2 at x = 1: I5 / (pi / (2 |2 - Y|) - I8) with X = 2 in I5 and I8."""
    alpha = alpha_closed_form(y) if alpha is None else alpha
    Y = y + 1.0 / y
    cos_a = math.cos(alpha)
    I5, _ = segment_integral_at(2.0, Y, cos_a, -1.0, 0.0, Integrand.ABS_DH_OVER_W, tol)
    I8, _ = segment_integral_at(2.0, Y, cos_a, -1.0, 0.0, Integrand.ABS_W_DH, tol)
    return I5 / (0.5 * x1_target(y) - I8)
