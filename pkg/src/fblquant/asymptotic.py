"""Infinite-blocklength baselines: ergodic capacity, best fixed rate,
outage capacity and the optimal quantizer with outage-free rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel
from .fbl import LOG2E, LinkParams, QuantizationScheme, achievable_rate_clamped, capacity
from .numerics import Bracket, QuadratureSpec, integrate, maximize_1d

__all__ = [
    "SolverFailure",
    "AsymptoticScheme",
    "ergodic_capacity",
    "fixed_rate_optimum",
    "epsilon_capacity",
    "asymptotic_quantizer",
    "quantizer_residuals",
    "benchmark_scheme",
]


class SolverFailure(RuntimeError):
    """An iterative solver could not produce a valid answer; ``trace`` says how far it got."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class AsymptoticScheme:
    """Boundaries phi_1..phi_{K+1} (last is inf), rates ln(1 + P phi_i).

    Gains below phi_1 are in outage; ``outage`` is F(phi_1).
    """

    boundaries: tuple
    rates: tuple
    outage: float
    goodput: float

    @property
    def goodput_bpcu(self) -> float:
        return self.goodput * LOG2E

    @property
    def size(self) -> int:
        return len(self.rates)


def ergodic_capacity(ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None) -> float:
    """E[ln(1 + P gamma)] in nats per channel use."""
    spec = spec or QuadratureSpec()
    top = ch.upper_truncation(spec.tail_mass)
    return integrate(lambda g: ch.pdf(g) * np.log1p(lp.p_lin * g), 0.0, top, spec)


def _fixed_rate_goodput(ch, lp, r):
    return r * float(ch.sf(math.expm1(r) / lp.p_lin))


def fixed_rate_optimum(ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None):
    """Best single rate without CSI: maximise r (1 - F((e^r - 1)/P)).

    Returns ``(rate, goodput)`` in nats.
    """
    spec = spec or QuadratureSpec()
    r_top = float(capacity(ch.upper_truncation(spec.tail_mass), lp))
    grid = np.linspace(0.0, r_top, 401)
    vals = [_fixed_rate_goodput(ch, lp, r) for r in grid]
    k = int(np.argmax(vals))
    br = Bracket(grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)])
    best = maximize_1d(lambda r: _fixed_rate_goodput(ch, lp, r), br, tol=1e-12)
    return best.arg, best.val


def epsilon_capacity(ch: ChannelModel, lp: LinkParams, eps_out: float) -> float:
    """Largest rate whose outage probability is at most ``eps_out``."""
    if not 0 < eps_out < 1:
        raise ValueError("eps_out must lie in (0, 1)")
    return float(math.log1p(lp.p_lin * ch.inv_cdf(eps_out)))


def _shoot(ch, lp, phi1, size):
    """Run the boundary recursion from phi_1; returns (F(phi_{K+1}) - 1, boundaries).

    An overshoot before the last step is reported as a large positive miss so
    bisection keeps treating it as "phi_1 too big".
    """
    p = lp.p_lin
    phis = [0.0, phi1]
    f_cur = float(ch.cdf(phi1))
    for i in range(1, size + 1):
        cur, prev = phis[i], phis[i - 1]
        f_cur = f_cur + float(ch.pdf(cur)) * (1 + cur * p) * math.log((1 + cur * p) / (1 + prev * p)) / p
        if i == size:
            return f_cur - 1.0, phis[1:]
        if f_cur >= 1.0:
            return f_cur - 1.0 + (size - i), phis[1:]
        phis.append(ch.inv_cdf(f_cur))


def asymptotic_quantizer(ch: ChannelModel, lp: LinkParams, size: int, tol: float = 1e-8) -> AsymptoticScheme:
    """Goodput-optimal quantizer for n -> inf by shooting on phi_1.

    The first-order conditions link consecutive boundaries through

        F(phi_{i+1}) = F(phi_i) + f(phi_i)(1 + P phi_i) ln((1 + P phi_i)/(1 + P phi_{i-1})) / P

    with phi_0 = 0; phi_1 is bisected until the recursion ends at F = 1.
    """
    if size < 1:
        raise ValueError("need at least one region")
    lo, hi = 0.0, ch.inv_cdf(0.99)
    miss_hi, _ = _shoot(ch, lp, hi, size)
    if miss_hi < 0:
        raise SolverFailure("no bracketing phi_1: recursion ends below F = 1 at the upper bracket")
    trace = []
    phi1 = hi
    for _ in range(400):
        phi1 = 0.5 * (lo + hi)
        miss, phis = _shoot(ch, lp, phi1, size)
        trace.append((phi1, miss))
        if abs(miss) <= tol or hi - lo <= 1e-15 * max(1.0, hi):
            break
        if miss > 0:
            hi = phi1
        else:
            lo = phi1
    else:
        raise SolverFailure("phi_1 bisection did not converge", trace)
    if abs(miss) > tol:
        raise SolverFailure(f"recursion misses F = 1 by {miss:.3g}", trace)
    phis = list(phis) + [math.inf]
    if any(b <= a for a, b in zip(phis, phis[1:])):
        raise SolverFailure("recursion produced non-increasing boundaries", trace)
    rates = [math.log1p(lp.p_lin * x) for x in phis[:-1]]
    sf = [float(ch.sf(x)) for x in phis[:-1]] + [0.0]
    goodput = math.fsum(r * (sf[i] - sf[i + 1]) for i, r in enumerate(rates))
    return AsymptoticScheme(tuple(phis), tuple(rates), float(ch.cdf(phis[0])), goodput)


def quantizer_residuals(scheme: AsymptoticScheme, ch: ChannelModel, lp: LinkParams):
    """Residual of the boundary recursion at every step (should be ~0)."""
    p = lp.p_lin
    phis = [0.0] + list(scheme.boundaries)
    out = []
    for i in range(1, len(phis) - 1):
        cur, prev = phis[i], phis[i - 1]
        step = float(ch.pdf(cur)) * (1 + cur * p) * math.log((1 + cur * p) / (1 + prev * p)) / p
        upper = 1.0 if math.isinf(phis[i + 1]) else float(ch.cdf(phis[i + 1]))
        out.append(upper - float(ch.cdf(cur)) - step)
    return out


def benchmark_scheme(ch: ChannelModel, lp: LinkParams, size: int, eps: float, top: float) -> QuantizationScheme:
    """Asymptotic boundaries used at finite n with rates R(n, phi_i, eps).

    The outage band [0, phi_1) becomes a zero-rate region, so the result has
    ``size + 1`` regions and ends at ``top`` instead of infinity.
    """
    asym = asymptotic_quantizer(ch, lp, size)
    inner = list(asym.boundaries[:-1])
    rates = [0.0] + [float(achievable_rate_clamped(lp, x, eps)) for x in inner]
    return QuantizationScheme(tuple([0.0] + inner + [max(top, inner[-1])]), tuple(rates))
