import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fblquant.asymptotic import (
    SolverFailure,
    asymptotic_quantizer,
    benchmark_scheme,
    epsilon_capacity,
    ergodic_capacity,
    fixed_rate_optimum,
    quantizer_residuals,
)
from fblquant.channel import Rayleigh, Rician
from fblquant.fbl import LinkParams

# scipy / Nelder-Mead references (tests/oracles/make_values.py)
RAYLEIGH_ERGODIC_P10 = 2.014642544708452  # e^{1/P} E1(1/P)
RICIAN_ERGODIC_P10 = 2.322276994886862
RAYLEIGH_FIXED_RATE = (1.7455280143764298, 1.0878078601534824)
RAYLEIGH_PHI2 = ((0.2628123839831077, 0.8931011986501844), 1.4031036902560197)


def test_ergodic_references(rayleigh, rician, lp_inf):
    assert ergodic_capacity(rayleigh, lp_inf) == pytest.approx(RAYLEIGH_ERGODIC_P10, rel=1e-10)
    assert ergodic_capacity(rician, lp_inf) == pytest.approx(RICIAN_ERGODIC_P10, rel=1e-10)


def test_fixed_rate_reference(rayleigh, lp_inf):
    r, g = fixed_rate_optimum(rayleigh, lp_inf)
    assert r == pytest.approx(RAYLEIGH_FIXED_RATE[0], rel=1e-7)
    assert g == pytest.approx(RAYLEIGH_FIXED_RATE[1], rel=1e-12)


def test_quantizer_matches_direct_maximisation(rayleigh, lp_inf):
    q = asymptotic_quantizer(rayleigh, lp_inf, 2)
    np.testing.assert_allclose(q.boundaries[:2], RAYLEIGH_PHI2[0], rtol=1e-6)
    assert q.goodput == pytest.approx(RAYLEIGH_PHI2[1], rel=1e-10)
    assert q.outage == pytest.approx(1 - math.exp(-q.boundaries[0]), rel=1e-12)
    assert math.isinf(q.boundaries[-1]) and q.size == 2


def test_quantizer_single_region_is_fixed_rate(rician, lp_inf):
    q = asymptotic_quantizer(rician, lp_inf, 1)
    _, g = fixed_rate_optimum(rician, lp_inf)
    assert q.goodput == pytest.approx(g, rel=1e-8)


@pytest.mark.parametrize("size", [2, 3, 4, 8])
def test_quantizer_residuals_vanish(rician, lp_inf, size):
    q = asymptotic_quantizer(rician, lp_inf, size)
    assert max(abs(x) for x in quantizer_residuals(q, rician, lp_inf)) < 1e-7


@given(st.sampled_from([1, 2, 3, 4, 6]), st.floats(min_value=0.0, max_value=20.0))
def test_quantizer_ordering(size, p_db):
    ch, lp = Rayleigh(), LinkParams.from_db(math.inf, p_db)
    small = asymptotic_quantizer(ch, lp, size)
    big = asymptotic_quantizer(ch, lp, size + 1)
    assert small.goodput <= big.goodput + 1e-10
    assert big.goodput <= ergodic_capacity(ch, lp) + 1e-10
    assert all(b > a for a, b in zip(big.boundaries, big.boundaries[1:]))


def test_quantizer_power_savings_for_one_bpcu(rayleigh):
    # power needed for 1 bpcu at n = inf: two regions save about 2 dB, four about 3 dB
    from fblquant.numerics import Bracket, find_root

    def power(size):
        return find_root(lambda p: asymptotic_quantizer(rayleigh, LinkParams.from_db(math.inf, p), size).goodput_bpcu - 1.0,
                         Bracket(-5.0, 15.0), tol=1e-6)

    p1, p2, p4 = power(1), power(2), power(4)
    assert p1 - p2 == pytest.approx(2.0, abs=0.7)
    assert p1 - p4 == pytest.approx(3.0, abs=0.7)


def test_epsilon_capacity(rayleigh, lp_inf):
    r = epsilon_capacity(rayleigh, lp_inf, 0.1)
    assert rayleigh.cdf(math.expm1(r) / 10) == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(ValueError):
        epsilon_capacity(rayleigh, lp_inf, 0.0)


def test_benchmark_scheme(rician, lp128):
    top = rician.upper_truncation(1e-12)
    sc = benchmark_scheme(rician, lp128, 3, 1e-3, top)
    assert sc.size == 4 and sc.rates[0] == 0.0 and sc.boundaries[-1] == top


def test_solver_failure_carries_trace():
    err = SolverFailure("x", [(1, 2)])
    assert err.trace == [(1, 2)]
    with pytest.raises(ValueError):
        asymptotic_quantizer(Rician(10.0), LinkParams(math.inf, 10.0), 0)
