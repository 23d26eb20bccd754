import inspect
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fblquant.asymptotic import asymptotic_quantizer, ergodic_capacity
from fblquant.channel import DegenerateRegionError, Rayleigh, Rician
from fblquant.fbl import LOG2E, LinkParams, region_success
from fblquant.unconstrained import (
    MergeRegions,
    SolverConfig,
    approx_rate,
    boundary_residual,
    inflection_point,
    optimal_boundary,
    optimal_rate,
    piecewise_omega,
    rate_curvature,
    rate_residual,
    run_algorithm1,
)

# dense-scan references (tests/oracles/make_values.py)
BOUNDARY_ROOT = 0.325318628785772  # r_prev = 0.5, r_cur = 1.5, n = 64, P = 10
RAYLEIGH_N64_SINGLE = (1.746445338432793, 1.5660706347171884)  # rate (nats), goodput (bpcu)
FIG3 = [  # (lo, hi, finite-n r*, finite-n max, n = inf max), nats
    (0.0, 0.9, 1.65026, 0.6345098420503886, 0.6394389255058107),
    (0.9, 1.2, 2.19802, 0.5744762086588392, 0.6135711886608776),
    (1.2, math.inf, 2.46446, 0.6957890881022981, 0.7371847547958825),
]


def _top(ch):
    return ch.upper_truncation(1e-12)


def test_single_region_reference(rayleigh):
    lp = LinkParams.from_db(64, 10)
    sol = optimal_rate(0.0, _top(rayleigh), rayleigh, lp)
    assert sol.rate == pytest.approx(RAYLEIGH_N64_SINGLE[0], rel=1e-7)
    assert sol.goodput * LOG2E == pytest.approx(RAYLEIGH_N64_SINGLE[1], rel=1e-9)


@pytest.mark.parametrize("lo,hi,r_star,g_fin,g_inf", FIG3)
def test_fig3_region_optima(rician, lp128, lo, hi, r_star, g_fin, g_inf):
    hi = min(hi, _top(rician))
    sol = optimal_rate(lo, hi, rician, lp128)
    assert sol.rate == pytest.approx(r_star, abs=1e-3)
    assert sol.goodput == pytest.approx(g_fin, rel=1e-8)
    assert sol.goodput < g_inf


@given(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.1, max_value=2.0),
       st.sampled_from([32, 128, 1024]), st.floats(min_value=0.0, max_value=20.0))
def test_rate_certificate(lo, width, n, p_db):
    ch, lp = Rician(10.0), LinkParams.from_db(n, p_db)
    hi = min(lo + width, _top(ch))
    if ch.mass(lo, hi) < 1e-10:
        return
    sol = optimal_rate(lo, hi, ch, lp)
    assert sol.residual <= 1e-6
    assert rate_residual(lo, hi, sol.rate, ch, lp) <= 1e-6
    # a local maximum: nearby rates do no better
    for r in (sol.rate * 0.99, sol.rate * 1.01):
        assert r * region_success(lo, hi, r, ch, lp) <= sol.goodput * (1 + 1e-12)


def test_degenerate_region(rician, lp128):
    with pytest.raises(DegenerateRegionError):
        optimal_rate(30.0, 31.0, rician, lp128)


@given(st.floats(min_value=0.0, max_value=1.5), st.floats(min_value=0.2, max_value=1.5),
       st.floats(min_value=0.3, max_value=3.0))
def test_curvature_matches_finite_difference(lo, width, r):
    ch, lp = Rician(10.0), LinkParams.from_db(128, 10)
    hi = lo + width
    h = 1e-3 * r

    def good(x):
        return x * region_success(lo, hi, x, ch, lp)

    def fd(step):
        return (good(r + step) - 2 * good(r) + good(r - step)) / step**2

    # Richardson step removes the O(h^2) truncation error
    fd = (4 * fd(h / 2) - fd(h)) / 3
    curv = rate_curvature(lo, hi, r, ch, lp)
    scale = max(abs(curv), 1e-3 * abs(good(r)) / r**2)
    assert abs(curv - fd) <= 1e-4 * scale + 1e-7


def test_concave_then_convex(rician, lp128):
    lo, hi = 0.5, 1.5
    assert rate_curvature(lo, hi, 0.1, rician, lp128) < 0
    r_inf = inflection_point(lo, hi, rician, lp128)
    assert abs(rate_curvature(lo, hi, r_inf, rician, lp128)) < 1e-8
    assert rate_curvature(lo, hi, 1.2 * r_inf, rician, lp128) > 0
    assert optimal_rate(lo, hi, rician, lp128).rate < r_inf
    # at three times the capacity of the top gain; a short block keeps the value representable
    lp8 = LinkParams.from_db(8, 10)
    assert rate_curvature(0.01, 0.05, 3 * math.log1p(lp8.p_lin * 0.05), rician, lp8) > 0


def test_piecewise_omega_anchor_points(lp128):
    r = 1.3
    a = math.expm1(r) / lp128.p_lin
    b = -lp128.p_lin * math.sqrt(lp128.n / (2 * math.pi * math.expm1(2 * r)))
    d1, d2 = a + 0.5 / b, a - 0.5 / b
    assert d1 < a < d2
    assert piecewise_omega(d1, r, lp128) == pytest.approx(1.0)
    assert piecewise_omega(d2, r, lp128) == pytest.approx(0.0, abs=1e-12)
    assert piecewise_omega(a, r, lp128) == pytest.approx(0.5)


@pytest.mark.parametrize("ch", [Rayleigh(), Rician(10.0)], ids=["rayleigh", "rician"])
@pytest.mark.parametrize("n", [32, 128, 512])
@pytest.mark.parametrize("p_db", [0.0, 10.0, 20.0])
def test_approx_rate_close_to_optimal(ch, n, p_db):
    lp = LinkParams.from_db(n, p_db)
    top = _top(ch)
    for lo, hi in ((0.0, ch.inv_cdf(0.5)), (ch.inv_cdf(0.5), top)):
        exact = optimal_rate(lo, hi, ch, lp).rate
        assert approx_rate(lo, hi, ch, lp) == pytest.approx(exact, rel=0.05)


def test_boundary_reference_and_residual():
    lp = LinkParams.from_db(64, 10)
    sol = optimal_boundary(0.5, 1.5, 0.0, 2.0, lp)
    assert not sol.at_boundary
    assert sol.phi == pytest.approx(BOUNDARY_ROOT, abs=1e-6)
    assert abs(boundary_residual(sol.phi, 0.5, 1.5, lp)) < 1e-6


def test_boundary_edge_cases():
    lp = LinkParams.from_db(64, 10)
    with pytest.raises(MergeRegions):
        optimal_boundary(1.0, 1.0, 0.0, 2.0, lp)
    # crossing lies outside the bracket: clamp to the nearer end
    assert optimal_boundary(0.5, 1.5, 0.5, 2.0, lp) == (0.5, True)
    assert optimal_boundary(0.5, 1.5, 0.0, 0.1, lp) == (0.1, True)


def test_boundary_is_channel_free():
    assert "ch" not in inspect.signature(optimal_boundary).parameters
    lp = LinkParams.from_db(128, 10)
    runs = []
    for ch in (Rayleigh(), Rician(10.0)):
        scheme, _ = run_algorithm1(ch, lp, 2, cfg=None)
        runs.append(optimal_boundary(0.7, 1.9, 0.0, _top(ch), lp).phi)
    assert runs[0] == runs[1]


def test_single_region_loop(rician, lp128):
    scheme, rep = run_algorithm1(rician, lp128, 1)
    assert rep.iterations == 0 and rep.converged
    assert scheme.rates[0] == pytest.approx(optimal_rate(0.0, _top(rician), rician, lp128).rate, rel=1e-12)


def test_fig4_scenario(rician, lp128):
    scheme, rep = run_algorithm1(rician, lp128, 3, init_boundaries=[5.0, 10.0])
    assert rep.converged and rep.iterations <= 80
    g = np.array([t.goodput for t in rep.trace])
    # block-coordinate ascent: no accepted sweep lowers the goodput
    assert np.all(np.diff(g) >= -1e-8)
    assert rep.total_goodput_bpcu == pytest.approx(2.7969738, abs=1e-6)


@pytest.mark.parametrize("ch,expected", [(Rayleigh(), 2.2758192442671032), (Rician(10.0), 2.865245016819107)],
                         ids=["rayleigh", "rician"])
def test_phi4_goodput_and_stationarity(ch, expected, lp128):
    scheme, rep = run_algorithm1(ch, lp128, 4)
    assert rep.converged
    assert rep.total_goodput_bpcu == pytest.approx(expected, abs=1e-7)
    # the boundary equation holds to about 3x the boundary tolerance; tighten it for the joint check
    scheme, rep = run_algorithm1(ch, lp128, 4, cfg=SolverConfig(conv_tol=1e-7))
    assert rep.total_goodput_bpcu == pytest.approx(expected, abs=1e-5)
    b, r = scheme.boundaries, scheme.rates
    for i in range(4):
        assert rate_residual(b[i], b[i + 1], r[i], ch, lp128) <= 1e-6
    for i in range(1, 4):
        assert abs(boundary_residual(b[i], r[i - 1], r[i], lp128)) <= 1e-6


def test_dominance_and_infinite_n_bounds(rician, lp128, lp_inf):
    g = {k: run_algorithm1(rician, lp128, k)[1].total_goodput for k in (1, 2, 4)}
    assert g[1] <= g[2] + 1e-8 and g[2] <= g[4] + 1e-8
    asym = asymptotic_quantizer(rician, lp_inf, 4).goodput
    assert g[4] <= asym <= ergodic_capacity(rician, lp_inf)


def test_init_validation(rician, lp128):
    with pytest.raises(ValueError):
        run_algorithm1(rician, lp128, 3, init_boundaries=[1.0])
    with pytest.raises(ValueError):
        run_algorithm1(rician, lp128, 0)
