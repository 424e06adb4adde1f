"""Tests for the modulus integrals and quadrature helpers."""

import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from periodforge import quadrature
from periodforge.core.config import PeriodForgeConfig, QuadratureMethod, set_config
from periodforge.core.exceptions import AccuracyError, DomainError
from periodforge.core.params import SurfaceParams
from periodforge.curve import eval_dh, eval_w2
from periodforge.quadrature import (
    INTEGRAL_NAMES,
    Integrand,
    PathKind,
    PathSpec,
    i7_quadratic_substitution,
    integral_set,
    integrate_desingularized,
    integrate_path,
    integrate_smooth,
    path_for,
    segment_integral_at,
)


def raw_density(params: SurfaceParams, integrand: Integrand, z: complex) -> float:
    """|dh / w| or |w dh| straight from the curve evaluators."""
    dh = abs(eval_dh(params, z))
    w = math.sqrt(abs(eval_w2(params, z)))
    return dh / w if integrand == Integrand.ABS_DH_OVER_W else w * dh


def midpoint_oracle(params: SurfaceParams, name: str, n: int = 1000) -> float:
    """Brute-force midpoint rule; segment halves go through t = a + (m - a) u^2 first."""
    spec = path_for(name, params)
    u = (np.arange(n) + 0.5) / n
    total = 0.0
    if spec.kind == PathKind.REAL_SEGMENT:
        m = 0.5 * (spec.a + spec.b)
        for end in (spec.a, spec.b):
            span = m - end
            values = [raw_density(params, spec.integrand, end + span * s * s) for s in u]
            total += abs(span) * np.mean(2.0 * u * np.array(values))
        return total
    for lo, hi in ((spec.a, params.alpha), (params.alpha, spec.b)):
        t = lo + (hi - lo) * u
        values = [raw_density(params, spec.integrand, cmath.exp(1j * s)) for s in t]
        total += (hi - lo) * np.mean(values)
    return total


def random_tuples(count: int, seed: int = 8):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        y = cmath.rect(rng.uniform(0.3, 0.7), rng.uniform(0.4, math.pi - 0.4))
        alpha = math.acos(2.0 * y.real / (1.0 + abs(y) ** 2))
        yield SurfaceParams(x=rng.uniform(0.1, 0.7), y=y, alpha=alpha, c=rng.uniform(0.5, 2.0))


class TestPathSpec:
    """Test contour descriptions."""

    def test_reversed_endpoints(self):
        with pytest.raises(DomainError):
            PathSpec(PathKind.REAL_SEGMENT, 0.5, 0.1, Integrand.ABS_W_DH)

    def test_segment_outside_unit_interval(self):
        with pytest.raises(DomainError):
            PathSpec(PathKind.REAL_SEGMENT, -2.0, 0.0, Integrand.ABS_W_DH)

    def test_arc_only_integrand_on_segment(self):
        with pytest.raises(DomainError):
            PathSpec(PathKind.REAL_SEGMENT, 0.0, 0.5, Integrand.DH_PLAIN)

    def test_arc_outside_range(self):
        with pytest.raises(DomainError):
            PathSpec(PathKind.UNIT_CIRCLE_ARC, 0.0, 4.0, Integrand.ABS_W_DH)

    def test_path_for_table(self, half_i_params):
        assert path_for("I1", half_i_params) == PathSpec(
            PathKind.REAL_SEGMENT, 0.0, 0.5, Integrand.ABS_DH_OVER_W
        )
        assert path_for("I4", half_i_params).kind == PathKind.UNIT_CIRCLE_ARC
        assert len(INTEGRAL_NAMES) == 10

    def test_path_for_unknown(self, half_i_params):
        with pytest.raises(DomainError) as exc_info:
            path_for("I9", half_i_params)

        assert "Unknown integral" in str(exc_info.value)

    def test_endpoint_exponents(self, half_i_params):
        """Test the inverse square root ends sit where the density blows up."""
        assert path_for("I1", half_i_params).endpoint_exponents(half_i_params) == (-0.5, 0.5)
        assert path_for("I3", half_i_params).endpoint_exponents(half_i_params) == (0.5, -0.5)
        assert path_for("I6", half_i_params).endpoint_exponents(half_i_params) == (0.5, 0.0)
        assert path_for("I2", half_i_params).endpoint_exponents(half_i_params) == (0.0, 0.0)


class TestIntegratePath:
    """Test integrate_path against independent quadrature."""

    def test_i1_against_raw_density(self, generic_params):
        """Test I1 matches QUADPACK on the untransformed density."""

        def raw(t):
            return abs(eval_dh(generic_params, t)) / math.sqrt(abs(eval_w2(generic_params, t)))

        expected, _ = integrate.quad(raw, 0.0, generic_params.x, limit=200, epsrel=1e-11)
        value, err = integrate_path(generic_params, path_for("I1", generic_params))

        assert value == pytest.approx(expected, rel=1e-7)
        assert 0.0 <= err < 1e-8 * value

    def test_arc_closed_forms(self, half_i_params):
        """Test A_den = pi / 3.75 and A_num = 0 at y = 0.5i."""
        a_den, _ = integrate_path(half_i_params, path_for("A_den", half_i_params))
        a_num, _ = integrate_path(half_i_params, path_for("A_num", half_i_params))

        assert a_den == pytest.approx(math.pi / 3.75, rel=1e-10)
        assert a_num == pytest.approx(0.0, abs=1e-10)

    def test_methods_agree(self, generic_params):
        spec = path_for("I4", generic_params)
        gk, _ = integrate_path(generic_params, spec, method=QuadratureMethod.GAUSS_KRONROD)
        de, _ = integrate_path(generic_params, spec, method=QuadratureMethod.DOUBLE_EXPONENTIAL)

        assert gk == pytest.approx(de, rel=1e-9)

    def test_i7_substitution_agrees(self, generic_params):
        value, _ = integrate_path(generic_params, path_for("I7", generic_params))
        substituted, _ = i7_quadratic_substitution(generic_params)

        assert substituted == pytest.approx(value, rel=1e-8)

    def test_degenerate_path(self, half_i_params):
        spec = PathSpec(PathKind.REAL_SEGMENT, 0.2, 0.2, Integrand.ABS_W_DH)
        assert integrate_path(half_i_params, spec) == (0.0, 0.0)

    def test_non_positive_tolerance(self, half_i_params):
        with pytest.raises(DomainError):
            integrate_path(half_i_params, path_for("I1", half_i_params), tol=0.0)

    def test_accuracy_error(self, half_i_params, mocker):
        """Test an unconverged integral raises AccuracyError."""
        mocker.patch("periodforge.quadrature._gauss_kronrod", return_value=(1.0, 1.0))

        with pytest.raises(AccuracyError) as exc_info:
            integrate_path(half_i_params, path_for("I3", half_i_params))

        assert exc_info.value.achieved_err == pytest.approx(2.0)

    def test_extended_precision_fallback(self, half_i_params, mocker):
        """Test a stagnating QUADPACK call is retried in mpmath."""
        expected, _ = integrate_path(half_i_params, path_for("I3", half_i_params))
        set_config(PeriodForgeConfig(extended_precision=True))
        mocker.patch("periodforge.quadrature._gauss_kronrod", return_value=(1.0, 1.0))
        spy = mocker.spy(quadrature, "_double_exponential")

        value, _ = integrate_path(half_i_params, path_for("I3", half_i_params))

        assert spy.call_count == 2
        assert value == pytest.approx(expected, rel=1e-9)


class TestOracles:
    """Test the production integrals against brute-force and symmetry oracles."""

    @pytest.mark.parametrize("params", list(random_tuples(10)), ids=lambda p: f"x={p.x:.3f}")
    def test_midpoint_oracle(self, params):
        """Test each of I1..I8 against the midpoint rule on random tuples."""
        for name in ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8"):
            value, _ = integrate_path(params, path_for(name, params))
            assert value == pytest.approx(midpoint_oracle(params, name), rel=1e-5), name

    @pytest.mark.parametrize("name", ["I1", "I4", "I6", "I7"])
    def test_halving_tolerance(self, generic_params, name):
        """Test halving tol moves the value by no more than the previous error estimate."""
        spec = path_for(name, generic_params)
        tol = 1e-6
        value, err = integrate_path(generic_params, spec, tol)
        for _ in range(6):
            tol /= 2.0
            refined, refined_err = integrate_path(generic_params, spec, tol)
            assert abs(refined - value) <= err + 1e-15 * abs(value)
            value, err = refined, refined_err

    def test_gauss_legendre_order(self, half_i_params):
        """Test doubling the nodes on a desingularized half cuts the error by more than 4."""
        spec = path_for("I1", half_i_params)
        mode, lo, hi = quadrature._pieces(half_i_params, spec)[0]
        g, ulo, uhi = quadrature._mapped(quadrature._density(half_i_params, spec), mode, lo, hi)
        reference, _ = integrate.quad(g, ulo, uhi, epsabs=1e-15, epsrel=1e-13)

        def gauss(n: int) -> float:
            nodes, weights = np.polynomial.legendre.leggauss(n)
            u = ulo + 0.5 * (uhi - ulo) * (nodes + 1.0)
            return 0.5 * (uhi - ulo) * sum(w * g(s) for w, s in zip(weights, u))

        coarse = abs(gauss(6) - reference)
        fine = abs(gauss(12) - reference)

        assert coarse > 0.0
        assert fine < coarse / 4.0

    @pytest.mark.parametrize("name", ["I2", "I4"])
    def test_arc_integrals_on_conjugate_arc(self, generic_params, name):
        """Test I2 and I4 are unchanged when computed on z = e^{-it}."""
        integrand = path_for(name, generic_params).integrand
        alpha = generic_params.alpha

        def density(t: float) -> float:
            return raw_density(generic_params, integrand, cmath.exp(-1j * t))

        mirrored, _ = integrate.quad(density, 0.0, math.pi, points=[alpha], limit=200, epsabs=1e-14, epsrel=1e-12)
        value, _ = integrate_path(generic_params, path_for(name, generic_params))

        assert value == pytest.approx(mirrored, rel=1e-9)


class TestIntegralSet:
    """Test the bundled integral set."""

    def test_all_values_positive(self, generic_params):
        values = integral_set(generic_params)

        for name in ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8", "A_den"):
            assert getattr(values, name) > 0, name
        assert set(values.err) == set(INTEGRAL_NAMES)
        assert set(values.as_dict()) == set(INTEGRAL_NAMES)

    def test_cos_alpha(self, half_i_params):
        values = integral_set(half_i_params)
        assert values.cos_alpha == pytest.approx(0.0, abs=1e-10)


class TestHelpers:
    """Test the generic integration helpers."""

    def test_desingularized_arcsine(self):
        value, _ = integrate_desingularized(lambda t: 1.0 / math.sqrt(t * (1.0 - t)), 0.0, 1.0)
        assert value == pytest.approx(math.pi, rel=1e-10)

    def test_desingularized_empty(self):
        assert integrate_desingularized(math.sqrt, 0.3, 0.3) == (0.0, 0.0)

    def test_smooth(self):
        value, _ = integrate_smooth(math.sin, [0.0, 1.0, math.pi])
        assert value == pytest.approx(2.0, rel=1e-12)

    def test_segment_integral_at_matches_params(self, generic_params):
        value, _ = segment_integral_at(
            generic_params.X,
            generic_params.Y,
            generic_params.cos_alpha,
            0.0,
            generic_params.x,
            Integrand.ABS_W_DH,
        )
        expected, _ = integrate_path(generic_params, path_for("I3", generic_params))

        assert value == pytest.approx(expected, rel=1e-9)

    def test_segment_integral_at_arc_integrand(self):
        with pytest.raises(DomainError):
            segment_integral_at(2.0, -1.5j, 0.0, 0.0, 1.0, Integrand.DH_PLAIN)
