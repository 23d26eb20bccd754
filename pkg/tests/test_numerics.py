import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from fblquant.numerics import (
    Bracket,
    NoRootError,
    QuadratureError,
    QuadratureSpec,
    bessel_i0,
    bessel_i0e,
    find_root,
    gauss_pdf,
    gauss_q,
    gauss_q_inv,
    integrate,
    log_gauss_cdf,
    maximize_1d,
)


def test_gauss_q_known_values():
    assert gauss_q(0.0) == 0.5
    # Q(1.959963984540054) = 0.025
    assert gauss_q(1.959963984540054) == pytest.approx(0.025, rel=1e-14)
    assert gauss_q(np.inf) == 0.0 and gauss_q(-np.inf) == 1.0


def test_gauss_q_deep_tail_is_relative_accurate():
    # Q(30) from the asymptotic series, far below double epsilon
    t = 30.0
    series = gauss_pdf(t) / t * (1 - 1 / t**2 + 3 / t**4 - 15 / t**6)
    assert gauss_q(t) == pytest.approx(series, rel=1e-9)


@given(st.floats(min_value=1e-300, max_value=1 - 1e-12))
def test_gauss_q_inv_round_trip(p):
    assert gauss_q(gauss_q_inv(p)) == pytest.approx(p, rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_gauss_q_inv_domain(p):
    with pytest.raises(ValueError):
        gauss_q_inv(p)


@given(st.floats(min_value=-35.0, max_value=8.0))
def test_log_gauss_cdf_matches_log1m_q(t):
    assert log_gauss_cdf(t) == pytest.approx(math.log(1 - gauss_q(t)) if t > -5 else math.log(gauss_q(-t)), rel=1e-10)


@given(st.floats(min_value=0.0, max_value=700.0))
def test_bessel_i0_scaled_consistency(x):
    assert bessel_i0e(x) * math.exp(x) == pytest.approx(bessel_i0(x), rel=1e-12)


def test_bessel_i0_overflow_signalled():
    with pytest.raises(OverflowError):
        bessel_i0(800.0)
    assert bessel_i0e(800.0) == pytest.approx(special.i0e(800.0), rel=1e-14)


def test_integrate_polynomial_exact():
    assert integrate(lambda x: 3 * x**2, 0.0, 2.0) == pytest.approx(8.0, rel=1e-15)


def test_integrate_kink_with_break_point():
    f = lambda x: np.abs(x - 0.3)
    exact = 0.3**2 / 2 + 0.7**2 / 2
    assert integrate(f, 0.0, 1.0, points=[0.3]) == pytest.approx(exact, rel=1e-13)
    assert integrate(f, 0.0, 1.0) == pytest.approx(exact, rel=1e-9)


def test_integrate_vector_valued_and_reversed():
    out = integrate(lambda x: np.vstack([np.ones_like(x), x]), 0.0, 2.0)
    np.testing.assert_allclose(out, [2.0, 2.0], rtol=1e-14)
    assert integrate(lambda x: x, 1.0, 0.0) == pytest.approx(-0.5)
    assert integrate(lambda x: x, 1.0, 1.0) == 0.0


def test_integrate_gaussian_tail():
    # integral of the normal density over [5, 40] is Q(5)
    assert integrate(gauss_pdf, 5.0, 40.0) == pytest.approx(gauss_q(5.0), rel=1e-10)


def test_integrate_rejects_infinite_limits():
    with pytest.raises(ValueError):
        integrate(np.exp, 0.0, math.inf)


def test_integrate_reports_failure_with_estimate():
    spec = QuadratureSpec(rel_tol=1e-15, abs_tol=1e-300, max_subdivisions=3)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sin(1 / np.maximum(x, 1e-9)), 1e-3, 1.0, spec)
    assert math.isfinite(info.value.estimate)


@given(st.floats(min_value=0.05, max_value=5.0))
def test_find_root_cubic(c):
    root = find_root(lambda x: x**3 - c, Bracket(0.0, 2.0))
    assert root == pytest.approx(c ** (1 / 3), abs=1e-12)


def test_find_root_no_sign_change():
    with pytest.raises(NoRootError):
        find_root(lambda x: x * x + 1, Bracket(-1.0, 1.0))


def test_bracket_validation():
    with pytest.raises(ValueError):
        Bracket(1.0, 0.0)


def test_maximize_interior_and_boundary():
    m = maximize_1d(lambda x: -(x - 0.3) ** 2, Bracket(0.0, 1.0), tol=1e-10)
    assert m.arg == pytest.approx(0.3, abs=1e-8) and not m.at_boundary
    m = maximize_1d(lambda x: x, Bracket(0.0, 1.0))
    assert m.arg == 1.0 and m.at_boundary
