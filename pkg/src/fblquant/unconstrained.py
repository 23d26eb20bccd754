"""Goodput maximisation without a reliability constraint.

Block coordinate ascent: every outer iteration re-optimises all region rates
for fixed boundaries, then sweeps the interior boundaries from the top down
for fixed rates, until no boundary moves by more than ``conv_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .channel import ChannelModel, DegenerateRegionError
from .fbl import (
    LinkParams,
    QuantizationScheme,
    TraceEntry,
    capacity,
    dispersion,
    log_success,
    omega,
    region_success,
    region_success_curve,
    region_success_derivatives,
    scheme_totals,
)
from .numerics import Bracket, NoRootError, QuadratureSpec, find_root, maximize_1d

__all__ = [
    "SolverConfig",
    "RateSolution",
    "BoundarySolution",
    "MergeRegions",
    "optimal_rate",
    "limiting_rate",
    "rate_upper_bound",
    "approx_rate",
    "approx_success",
    "piecewise_omega",
    "rate_curvature",
    "inflection_point",
    "rate_residual",
    "optimal_boundary",
    "boundary_residual",
    "equal_mass_boundaries",
    "run_algorithm1",
]


@dataclass(frozen=True)
class SolverConfig:
    conv_tol: float = 1e-4
    max_outer_iters: int = 500
    rate_tol: float = 1e-8
    boundary_tol: float = 1e-8
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    paper_exact: bool = False

    def __post_init__(self):
        if min(self.conv_tol, self.rate_tol, self.boundary_tol) <= 0 or self.max_outer_iters < 1:
            raise ValueError("solver tolerances and iteration cap must be positive")


class RateSolution(NamedTuple):
    rate: float
    goodput: float
    residual: float = 0.0
    at_boundary: bool = False
    degenerate: bool = False


class BoundarySolution(NamedTuple):
    phi: float
    at_boundary: bool = False


class MergeRegions(ValueError):
    """Neighbouring regions share a rate, so any boundary between them is optimal."""


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------


def rate_upper_bound(hi: float, lp: LinkParams) -> float:
    """A rate beyond which no region ending at ``hi`` has a goodput maximum."""
    return float(capacity(hi, lp) + 6.0 * math.sqrt(dispersion(hi, lp) / lp.n) + 1e-3)


def rate_residual(lo, hi, r, ch, lp, spec=None) -> float:
    """Relative residual of the stationarity condition r = -S(r)/S'(r)."""
    s, d1, _ = region_success_derivatives(lo, hi, r, ch, lp, spec)
    if d1 == 0:
        return math.inf if s > 0 else 0.0
    return abs(r + s / d1) / max(r, 1e-300)


def _uphill_bracket(f, x0, lo, hi):
    """Walk uphill from ``x0`` with growing steps until the value drops."""
    h = max(0.05 * x0, 1e-3 * (hi - lo))
    f0 = f(x0)
    right = min(x0 + h, hi)
    if f(right) >= f0:
        a, b = x0, right
        fb = f(b)
        while b < hi:
            h *= 2.0
            c = min(b + h, hi)
            fc = f(c)
            if fc < fb:
                return Bracket(a, c)
            a, b, fb = b, c, fc
        return Bracket(a, hi)
    a, b = max(x0 - h, lo), right
    fa = f(a)
    while a > lo and fa > f0:
        h *= 2.0
        c = max(a - h, lo)
        f0, a, fa = fa, c, f(c)
    return Bracket(a, b) if a < b else Bracket(lo, hi)


def limiting_rate(gamma: float, lp: LinkParams) -> RateSolution:
    """Rate maximising r (1 - omega(gamma, r)) at a single gain.

    This is the zero-mass limit of a region collapsed onto ``gamma``.
    """
    r_top = rate_upper_bound(gamma, lp)
    grid = np.linspace(0.0, r_top, 257)
    vals = grid * (1.0 - omega(gamma, grid, lp))
    k = int(np.argmax(vals))
    br = Bracket(grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)])
    best = maximize_1d(lambda r: r * (1.0 - float(omega(gamma, r, lp))), br, tol=1e-10)
    return RateSolution(best.arg, 0.0, 0.0, best.at_boundary, True)


def optimal_rate(
    lo: float,
    hi: float,
    ch: ChannelModel,
    lp: LinkParams,
    cfg: SolverConfig | None = None,
    warm: float | None = None,
) -> RateSolution:
    """Goodput-maximising rate of the region [lo, hi] for finite n.

    The region goodput r S(r) is maximised directly (coarse scan or uphill
    search from ``warm``, then golden section), and the result is polished
    on the stationarity equation S + r S' = 0.  ``residual`` is the relative
    residual of r = -S/S' at the returned rate.
    """
    cfg = cfg or SolverConfig()
    spec = cfg.quadrature
    if ch.mass(lo, hi) <= 1e-14:
        raise DegenerateRegionError(f"region [{lo}, {hi}] has no mass")
    r_top = rate_upper_bound(hi, lp)

    def obj(r):
        return r * region_success(lo, hi, r, ch, lp, spec) if r > 0 else 0.0

    if warm is not None and 0 < warm < r_top:
        br = _uphill_bracket(obj, warm, 0.0, r_top)
    else:
        grid = np.linspace(0.0, r_top, 49)
        vals = grid * region_success_curve(lo, hi, grid, ch, lp, spec)
        k = int(np.argmax(vals))
        br = Bracket(grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)])
    best = maximize_1d(obj, br, tol=cfg.rate_tol)
    r = best.arg
    if r > 0 and not best.at_boundary:
        r = _polish_rate(lo, hi, r, ch, lp, spec, br)
    s, d1, _ = region_success_derivatives(lo, hi, r, ch, lp, spec)
    resid = abs(r + s / d1) / r if (r > 0 and d1 != 0) else math.inf
    return RateSolution(r, r * s, resid, best.at_boundary)


def _polish_rate(lo, hi, r, ch, lp, spec, br):
    def stat(x):
        s, d1, _ = region_success_derivatives(lo, hi, x, ch, lp, spec)
        return s + x * d1

    delta = 1e-6 * max(r, 1e-3)
    a, b = max(r - delta, br.lo), min(r + delta, br.hi)
    for _ in range(8):
        if a < b and stat(a) > 0 > stat(b):
            return find_root(stat, Bracket(a, b), tol=1e-14)
        delta *= 10.0
        a, b = max(r - delta, br.lo), min(r + delta, br.hi)
    return r


def piecewise_omega(gamma, r, lp: LinkParams):
    """Linearised omega: 1 below Delta_1, 0 above Delta_2, linear through 1/2 at a."""
    a, b, d1, d2 = _linearisation(r, lp)
    g = np.asarray(gamma, dtype=float)
    out = np.where(g < d1, 1.0, np.where(g > d2, 0.0, 0.5 + b * (g - a)))
    return out[()]


def _linearisation(r, lp):
    a = math.expm1(r) / lp.p_lin
    b = -lp.p_lin * math.sqrt(lp.n / (2.0 * math.pi * math.expm1(2.0 * r)))
    return a, b, a + 0.5 / b, a - 0.5 / b


def _approx_terms(lo, hi, r, ch, lp):
    """(transition term, full-success term) of the linearised success mass."""
    a, b, d1, d2 = _linearisation(r, lp)
    mid = 0.0
    left, right = max(d1, lo), min(d2, hi)
    if hi > d1 and d2 > lo and right > left:
        m = ch.mass(left, right)
        if m > 0:
            try:
                mean = ch.truncated_mean(left, right)
            except DegenerateRegionError:
                mean = 0.5 * (left + right)
            mid = m * (0.5 + b * (a - mean))
    full = ch.mass(max(d2, lo), hi) if hi > d2 else 0.0
    return mid, full


def approx_success(lo, hi, r, ch: ChannelModel, lp: LinkParams) -> float:
    """Success mass of [lo, hi] at rate r with omega replaced by its linearisation."""
    mid, full = _approx_terms(lo, hi, r, ch, lp)
    return mid + full


def approx_rate(
    lo: float,
    hi: float,
    ch: ChannelModel,
    lp: LinkParams,
    cfg: SolverConfig | None = None,
) -> float:
    """Close approximation of the optimal rate from the linearised omega.

    Solves A(r) + r S'(r) = 0 where A is the linearised success mass and S'
    the exact rate derivative.  With ``cfg.paper_exact`` the full-success
    term is multiplied by r (the literal variant).  Falls back to
    maximising r A(r) if no sign change is found.
    """
    cfg = cfg or SolverConfig()
    spec = cfg.quadrature
    if ch.mass(lo, hi) <= 1e-14:
        raise DegenerateRegionError(f"region [{lo}, {hi}] has no mass")

    def eq(r):
        mid, full = _approx_terms(lo, hi, r, ch, lp)
        _, d1, _ = region_success_derivatives(lo, hi, r, ch, lp, spec)
        if cfg.paper_exact:
            return mid + r * full + r * d1
        return mid + full + r * d1

    r_top = rate_upper_bound(hi, lp)
    grid = np.linspace(r_top / 64, r_top, 64)
    prev_r, prev_v = None, None
    for r in grid:
        v = eq(r)
        if prev_v is not None and prev_v > 0 >= v:
            return find_root(eq, Bracket(prev_r, r), tol=cfg.rate_tol)
        prev_r, prev_v = r, v
    best = maximize_1d(lambda r: r * approx_success(lo, hi, r, ch, lp), Bracket(0.0, r_top), tol=cfg.rate_tol)
    return best.arg


def rate_curvature(lo, hi, r, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None) -> float:
    """Second rate derivative of the region goodput, 2 S'(r) + r S''(r)."""
    _, d1, d2 = region_success_derivatives(lo, hi, r, ch, lp, spec)
    return 2.0 * d1 + r * d2


def inflection_point(lo, hi, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None) -> float:
    """First rate where the region goodput turns from concave to convex."""
    r_top = 3.0 * rate_upper_bound(hi, lp)
    grid = np.linspace(r_top / 400, r_top, 400)
    prev = None
    for r in grid:
        c = rate_curvature(lo, hi, r, ch, lp, spec)
        if prev is not None and prev[1] < 0 <= c:
            return find_root(lambda x: rate_curvature(lo, hi, x, ch, lp, spec), Bracket(prev[0], r), tol=1e-12)
        prev = (r, c)
    raise NoRootError("no concave-to-convex transition found")


# --------------------------------------------------------------------------
# boundaries
# --------------------------------------------------------------------------


def _log_ratio(phi, r_prev, r_cur, lp):
    # log(r_cur S_cur / (r_prev S_prev)); positive where the upper region's rate pays more.
    # Both successes underflow near phi = 0, where the lower rate always wins.
    with np.errstate(divide="ignore", invalid="ignore"):
        h = float(log_success(phi, r_cur, lp) - log_success(phi, r_prev, lp))
        h += math.log(r_cur) - math.log(r_prev) if r_prev > 0 else math.inf
    if math.isnan(h):
        h = -math.inf
    return min(max(h, -1e300), 1e300)


def boundary_residual(phi, r_prev, r_cur, lp: LinkParams) -> float:
    """r_prev / r_cur - (1 - omega(phi, r_cur)) / (1 - omega(phi, r_prev))."""
    s_prev = 1.0 - float(omega(phi, r_prev, lp))
    s_cur = 1.0 - float(omega(phi, r_cur, lp))
    return r_prev / r_cur - s_cur / s_prev


def optimal_boundary(r_prev: float, r_cur: float, lo: float, hi: float, lp: LinkParams, tol: float = 1e-13) -> BoundarySolution:
    """Boundary between a region at ``r_prev`` and the next one at ``r_cur``.

    Solves r_prev (1 - omega(phi, r_prev)) = r_cur (1 - omega(phi, r_cur))
    on [lo, hi], written as a log ratio so the trivial solution at phi = 0
    (both success probabilities vanish) is excluded.  No channel law enters.
    When there is no crossing the nearer optimal end of the bracket is
    returned with ``at_boundary=True``.
    """
    if r_prev == r_cur:
        raise MergeRegions("equal rates: boundary is arbitrary")
    if r_prev > r_cur:
        raise ValueError("rates must increase across the boundary")
    if hi <= lo:
        return BoundarySolution(lo, True)
    a = max(lo, 1e-300)
    h_lo = _log_ratio(a, r_prev, r_cur, lp)
    h_hi = _log_ratio(hi, r_prev, r_cur, lp)
    if h_lo >= 0 and h_hi >= 0:
        return BoundarySolution(lo, True)
    if h_lo <= 0 and h_hi <= 0:
        return BoundarySolution(hi, True)
    return BoundarySolution(find_root(lambda x: _log_ratio(x, r_prev, r_cur, lp), Bracket(a, hi), tol=tol))


# --------------------------------------------------------------------------
# outer loop
# --------------------------------------------------------------------------


def equal_mass_boundaries(ch: ChannelModel, size: int, top: float):
    return [0.0] + [ch.inv_cdf(i / size) for i in range(1, size)] + [top]


def _rate_pass(bounds, ch, lp, cfg, warm_rates=None):
    rates = []
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        try:
            warm = None
            if warm_rates is None:
                try:
                    warm = approx_rate(lo, hi, ch, lp, cfg)
                except NoRootError:
                    warm = None
            else:
                warm = warm_rates[i]
            sol = optimal_rate(lo, hi, ch, lp, cfg, warm=warm)
        except DegenerateRegionError:
            sol = limiting_rate(0.5 * (lo + hi), lp)
        rates.append(sol.rate)
    return rates


def _boundary_pass(bounds, rates, lp, cfg):
    new = list(bounds)
    for i in range(len(rates) - 1, 0, -1):
        try:
            sol = optimal_boundary(rates[i - 1], rates[i], new[i - 1], new[i + 1], lp)
        except MergeRegions:
            continue
        except ValueError:
            # out-of-order rates: the lower-rate region takes the whole bracket
            sol = BoundarySolution(new[i + 1], True)
        new[i] = sol.phi
    return new


def run_algorithm1(
    ch: ChannelModel,
    lp: LinkParams,
    size: int,
    init_boundaries: Sequence[float] | None = None,
    cfg: SolverConfig | None = None,
):
    """Alternate rate and boundary updates until the boundaries settle.

    ``init_boundaries`` lists the interior boundaries phi_2..phi_K (the
    outer ones are 0 and the tail truncation point); the default is the
    equal-probability split.  Values beyond the truncation point are clamped.

    Returns ``(scheme, report)``; ``report.trace`` has one entry per outer
    iteration with the scheme after its boundary sweep.
    """
    cfg = cfg or SolverConfig()
    if size < 1:
        raise ValueError("need at least one region")
    top = ch.upper_truncation(cfg.quadrature.tail_mass)
    if init_boundaries is None:
        bounds = equal_mass_boundaries(ch, size, top)
    else:
        inner = [min(max(float(x), 0.0), top) for x in init_boundaries]
        if len(inner) != size - 1 or any(b < a for a, b in zip(inner, inner[1:])):
            raise ValueError("init_boundaries must be size-1 non-decreasing interior points")
        bounds = [0.0] + inner + [top]

    trace = []
    converged = size == 1
    rates = _rate_pass(bounds, ch, lp, cfg)
    it = 0
    if size > 1:
        for it in range(1, cfg.max_outer_iters + 1):
            new = _boundary_pass(bounds, rates, lp, cfg)
            move = max(abs(x - y) for x, y in zip(new, bounds))
            bounds = new
            rates = _rate_pass(bounds, ch, lp, cfg, warm_rates=rates)
            rep = scheme_totals(QuantizationScheme(tuple(bounds), tuple(rates)), ch, lp, cfg.quadrature)
            if not math.isfinite(rep.total_goodput):
                raise FloatingPointError(f"non-finite goodput at iteration {it}")
            trace.append(TraceEntry(tuple(bounds), tuple(rates), rep.total_goodput, rep.total_cep))
            if move < cfg.conv_tol:
                converged = True
                break
    scheme = QuantizationScheme(tuple(bounds), tuple(rates))
    rep = scheme_totals(scheme, ch, lp, cfg.quadrature)
    rep.iterations = it
    rep.trace = trace
    rep.converged = converged
    return scheme, rep
