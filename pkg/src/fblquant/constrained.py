"""Goodput maximisation under a total codeword-error budget.

The budget ``eps_m`` is split over the regions inversely to the squared
conditional mean gain of each region.  Rates are then the unconstrained
optimum backed off until the region meets its share, and boundaries are
moved by an augmented Lagrangian that penalises budget violations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .channel import ChannelModel, DegenerateRegionError
from .fbl import (
    LinkParams,
    QuantizationScheme,
    TraceEntry,
    region_success_and_cep,
    region_success_derivatives,
    scheme_totals,
)
from .numerics import Bracket, find_root, maximize_1d
from .unconstrained import (
    SolverConfig,
    equal_mass_boundaries,
    limiting_rate,
    optimal_rate,
)

__all__ = [
    "ConstrainedConfig",
    "CepBudget",
    "AugLagState",
    "RateStatus",
    "ConstrainedRate",
    "allocate_cep",
    "constrained_rate",
    "rate_multiplier",
    "augmented_objective",
    "aug_boundary_update",
    "run_algorithm2",
]

RHO_CAP = 1e12


@dataclass(frozen=True)
class ConstrainedConfig:
    """Knobs for the constrained solver.

    ``rate_step`` is the fixed decrement used when ``paper_exact_decrement``
    is set; otherwise rates are backed off by root finding.

    With ``warm_duals`` (default) every boundary step starts its multipliers
    at the values implied by the rate step, lets the error budgets follow the
    candidate boundary, and takes a single penalised maximisation per outer
    pass.  Without it the multipliers start at zero and the inner loop runs
    until the boundary settles, which for fixed rates ends wherever the rate
    step left the budgets tight.  ``warm_rho`` is the penalty weight of that
    single step; it only damps the move, the fixed point does not depend on it.

    ``accelerate`` extrapolates the boundary sequence (vector Aitken step)
    when successive moves line up.  In the warm mode any outer step that
    lowers the goodput is undone and later boundary moves are limited to a
    radius that shrinks on each undo and doubles on each accepted step.
    :meth:`literal` turns on every verbatim mode and switches both off.
    """

    base: SolverConfig = field(default_factory=SolverConfig)
    rho_init: float = 1.0
    beta: float | None = None
    rate_step: float = 1e-3
    max_restarts: int = 5
    max_inner_iters: int = 60
    warm_duals: bool = True
    warm_rho: float = 1e-4
    accelerate: bool = True
    paper_exact_alloc: bool = False
    paper_exact_decrement: bool = False
    paper_exact_updates: bool = False

    def __post_init__(self):
        if self.rho_init <= 0 or self.warm_rho <= 0 or (self.beta is not None and self.beta <= 0):
            raise ValueError("rho_init and beta must be positive")
        if self.rate_step <= 0 or self.max_restarts < 0 or self.max_inner_iters < 1:
            raise ValueError("invalid constrained solver settings")

    @classmethod
    def literal(cls, **kw) -> "ConstrainedConfig":
        base = kw.pop("base", SolverConfig())
        return cls(
            base=replace(base, paper_exact=True),
            warm_duals=False,
            accelerate=False,
            paper_exact_alloc=True,
            paper_exact_decrement=True,
            paper_exact_updates=True,
            **kw,
        )


@dataclass(frozen=True)
class CepBudget:
    eps_total: float
    eps_region: tuple
    literal: bool = False

    def __post_init__(self):
        e = tuple(float(x) for x in self.eps_region)
        object.__setattr__(self, "eps_region", e)
        if not 0 < self.eps_total < 1:
            raise ValueError("eps_total must lie in (0, 1)")
        if any(not x > 0 for x in e):
            raise ValueError("every region budget must be positive")
        if not self.literal and math.fsum(e) > self.eps_total * (1 + 1e-12):
            raise ValueError("region budgets exceed the total budget")


@dataclass
class AugLagState:
    """Multipliers (one per region), penalty weight and normalisation."""

    lam: np.ndarray
    mu: np.ndarray
    rho: float = 1.0
    beta: float = 1.0
    inner_iters: int = 0
    paper_exact_updates: bool = False
    rho_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.rho <= 0 or self.beta <= 0:
            raise ValueError("rho and beta must be positive")

    @classmethod
    def fresh(cls, size: int, rho: float, beta: float, paper_exact: bool = False) -> "AugLagState":
        return cls(np.zeros(size), np.zeros(size), rho, beta, 0, paper_exact, [rho])


class RateStatus:
    OK = "ok"
    BACKED_OFF = "backed-off"
    ZERO_RATE = "zero-rate"
    INFEASIBLE = "infeasible-region"


class ConstrainedRate(NamedTuple):
    rate: float
    cep: float
    status: str
    unconstrained: float


# --------------------------------------------------------------------------
# budget split
# --------------------------------------------------------------------------


def allocate_cep(boundaries: Sequence[float], ch: ChannelModel, eps_m: float, literal: bool = False) -> CepBudget:
    """Split ``eps_m`` so that eps_i * E[gamma | region i]^2 is the same for all i.

    With ``literal`` the scaling constant is eps_m / sum(E_i^2), which does
    not in general make the shares add up to ``eps_m``.
    """
    if not 0 < eps_m < 1:
        raise ValueError("eps_m must lie in (0, 1)")
    means = np.array([ch.truncated_mean(a, b) for a, b in zip(boundaries[:-1], boundaries[1:])])
    if np.any(means <= 0):
        raise DegenerateRegionError("a region has zero conditional mean gain")
    inv_sq = 1.0 / (means * means)
    if literal:
        alpha = eps_m / math.fsum(means * means)
    else:
        alpha = eps_m / math.fsum(inv_sq)
    return CepBudget(eps_m, tuple(alpha * inv_sq), literal)


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------


def _cep(lo, hi, r, ch, lp, spec):
    return region_success_and_cep(lo, hi, r, ch, lp, spec)[1]


def constrained_rate(
    lo: float,
    hi: float,
    eps: float,
    ch: ChannelModel,
    lp: LinkParams,
    cfg: ConstrainedConfig | None = None,
    warm: float | None = None,
) -> ConstrainedRate:
    """Best rate of [lo, hi] whose error mass is at most ``eps``.

    Starts from the unconstrained optimum and lowers the rate until the
    region error mass fits.  If no positive rate fits, the rate is 0 and
    the whole region mass counts as error; the status then says whether
    that still fits the budget.
    """
    cfg = cfg or ConstrainedConfig()
    if not eps > 0:
        raise ValueError("eps must be positive")
    spec = cfg.base.quadrature
    mass = ch.mass(lo, hi)

    def zero():
        st = RateStatus.INFEASIBLE if mass > eps else RateStatus.ZERO_RATE
        return ConstrainedRate(0.0, mass, st, r_opt)

    try:
        r_opt = optimal_rate(lo, hi, ch, lp, cfg.base, warm=warm).rate
    except DegenerateRegionError:
        r_opt = limiting_rate(0.5 * (lo + hi), lp).rate
    if hi <= lo or mass <= 0:
        return ConstrainedRate(r_opt, 0.0, RateStatus.OK, r_opt)
    c_opt = _cep(lo, hi, r_opt, ch, lp, spec)
    if c_opt <= eps:
        return ConstrainedRate(r_opt, c_opt, RateStatus.OK, r_opt)

    if cfg.paper_exact_decrement:
        r = r_opt
        while True:
            r -= cfg.rate_step
            if r <= 0:
                return zero()
            c = _cep(lo, hi, r, ch, lp, spec)
            if c <= eps:
                return ConstrainedRate(r, c, RateStatus.BACKED_OFF, r_opt)

    r_min = 1e-9 * r_opt
    if _cep(lo, hi, r_min, ch, lp, spec) > eps:
        return zero()
    target = math.log(eps)

    def g(r):
        return math.log(max(_cep(lo, hi, r, ch, lp, spec), 1e-300)) - target

    tol = cfg.base.boundary_tol
    r = find_root(g, Bracket(r_min, r_opt), tol=0.1 * tol)
    c = _cep(lo, hi, r, ch, lp, spec)
    while c > eps and r > r_min:
        r = max(r - 0.1 * tol, r_min)
        c = _cep(lo, hi, r, ch, lp, spec)
    return ConstrainedRate(r, c, RateStatus.BACKED_OFF, r_opt)


def rate_multiplier(lo, hi, r, ch: ChannelModel, lp: LinkParams, spec=None) -> float:
    """Multiplier of a tight region budget at rate ``r``.

    Stationarity of r S(r) - lam (mass - S(r)) in r gives
    lam = (S + r S') / (-S'); it is zero when the unconstrained optimum fits.
    """
    if r <= 0 or hi <= lo:
        return 0.0
    s, d1, _ = region_success_derivatives(lo, hi, r, ch, lp, spec)
    if d1 >= 0:
        return 0.0
    return max((s + r * d1) / -d1, 0.0)


# --------------------------------------------------------------------------
# augmented Lagrangian
# --------------------------------------------------------------------------


def _penalty_terms(cep, eps, lam, gap, mu, st: AugLagState):
    rho, beta = st.rho, st.beta
    if st.paper_exact_updates:
        pc = np.maximum(beta * (cep - eps) - lam / rho, 0.0) ** 2
        po = np.maximum(gap - mu / rho, 0.0) ** 2
        return -0.5 * rho * (pc.sum() - po.sum())
    pc = np.maximum(beta * (cep - eps) + lam / rho, 0.0) ** 2
    po = np.maximum(gap + mu / rho, 0.0) ** 2
    return -0.5 * rho * (pc.sum() + po.sum())


def augmented_objective(
    boundaries: Sequence[float],
    rates: Sequence[float],
    budget: CepBudget,
    state: AugLagState,
    ch: ChannelModel,
    lp: LinkParams,
    spec=None,
) -> float:
    """Goodput minus the quadratic penalties on error budgets and ordering.

    The ordering gaps are phi_i - phi_{i+1} (positive means violated).  In
    literal mode the ordering group enters with a flipped sign, which
    rewards violations; the default penalises both groups.
    """
    b = np.asarray(boundaries, dtype=float)
    r = np.asarray(rates, dtype=float)
    stats = [region_success_and_cep(b[i], max(b[i], b[i + 1]), r[i], ch, lp, spec) for i in range(r.size)]
    good = math.fsum(r[i] * stats[i][0] for i in range(r.size))
    cep = np.array([s[1] for s in stats])
    gap = b[:-1] - b[1:]
    return good + _penalty_terms(cep, np.asarray(budget.eps_region), state.lam, gap, state.mu, state)


def _region_means(b, ch):
    out = []
    for lo, hi in zip(b[:-1], b[1:]):
        try:
            out.append(ch.truncated_mean(lo, hi))
        except DegenerateRegionError:
            # zero-mass limit of the conditional mean
            out.append(0.5 * (lo + hi))
    return np.array(out)


def _shares(means, eps_m, literal):
    inv_sq = 1.0 / np.maximum(means * means, 1e-300)
    alpha = eps_m / (math.fsum(means * means) if literal else math.fsum(inv_sq))
    return alpha * inv_sq


def _allocate_tolerant(bounds, ch, eps_m, literal):
    # as allocate_cep, but an empty region uses its zero-mass limit
    return CepBudget(eps_m, tuple(_shares(_region_means(bounds, ch), eps_m, literal)), literal)


class _LocalProblem:
    """Pieces of the augmented objective that move with boundary ``i``.

    Other regions' error masses are frozen; with ``reallocate`` the budget
    split is recomputed for every candidate boundary.
    """

    def __init__(self, i, b, r, budget, st, ch, lp, spec, reallocate, literal):
        self.i, self.b, self.r = i, list(b), list(r)
        self.st, self.ch, self.lp, self.spec = st, ch, lp, spec
        self.eps_m = budget.eps_total
        self.eps_fixed = np.asarray(budget.eps_region, dtype=float)
        self.literal = literal
        self.means = _region_means(self.b, ch) if reallocate else None
        self.cep = np.array([
            region_success_and_cep(self.b[k], self.b[k + 1], self.r[k], ch, lp, spec)[1]
            for k in range(len(self.r))
        ])

    def eps(self, phi):
        if self.means is None:
            return self.eps_fixed
        i, b = self.i, self.b
        m = self.means.copy()
        m[i - 1 : i + 1] = _region_means([b[i - 1], phi, b[i + 1]], self.ch)
        return _shares(m, self.eps_m, self.literal)

    def evaluate(self, phi):
        """(objective, error masses, budgets, ordering gaps) at boundary ``phi``."""
        i, b, r = self.i, self.b, self.r
        s0, c0 = region_success_and_cep(b[i - 1], phi, r[i - 1], self.ch, self.lp, self.spec)
        s1, c1 = region_success_and_cep(phi, b[i + 1], r[i], self.ch, self.lp, self.spec)
        cep = self.cep.copy()
        cep[i - 1], cep[i] = c0, c1
        bb = np.array(b, dtype=float)
        bb[i] = phi
        gap = bb[:-1] - bb[1:]
        eps = self.eps(phi)
        val = r[i - 1] * s0 + r[i] * s1 + _penalty_terms(cep, eps, self.st.lam, gap, self.st.mu, self.st)
        return val, cep, eps, gap


def _update_multipliers(st: AugLagState, cep, eps, gap):
    rho, beta = st.rho, st.beta
    if st.paper_exact_updates:
        st.lam = np.maximum(rho * beta * (cep - eps) - st.lam, 0.0) ** 2
        st.mu = np.maximum(rho * gap - st.mu, 0.0) ** 2
    else:
        st.lam = np.maximum(st.lam + rho * beta * (cep - eps), 0.0)
        st.mu = np.maximum(st.mu + rho * gap, 0.0)
    st.rho = min(2.0 * rho, RHO_CAP)
    st.rho_history.append(st.rho)


class BoundaryUpdate(NamedTuple):
    phi: float
    gain: float
    inner_iters: int
    converged: bool


def aug_boundary_update(
    i: int,
    boundaries: Sequence[float],
    rates: Sequence[float],
    budget: CepBudget,
    state: AugLagState,
    ch: ChannelModel,
    lp: LinkParams,
    cfg: ConstrainedConfig | None = None,
    max_iters: int | None = None,
    reallocate: bool = False,
    radius: float = math.inf,
) -> BoundaryUpdate:
    """Move the interior boundary at list position ``i`` (1 <= i <= size-1).

    Each inner step maximises the augmented objective over
    [phi_{i-1}, phi_{i+1}] with the rates held fixed, then updates the
    multipliers and doubles rho.  The loop stops when phi moves less than
    ``boundary_tol``, rho reaches its cap, or ``max_iters`` steps were taken
    (a single step counts as settled).  ``radius`` limits the move away from
    the current boundary.  ``gain`` is the plain goodput change of the two
    adjacent regions.  ``state`` is updated in place.
    """
    cfg = cfg or ConstrainedConfig()
    if not 1 <= i <= len(rates) - 1:
        raise IndexError("boundary index out of range")
    spec = cfg.base.quadrature
    b = [float(x) for x in boundaries]
    r = [float(x) for x in rates]
    lo, hi = b[i - 1], b[i + 1]
    start = b[i]
    if hi <= lo:
        return BoundaryUpdate(start, 0.0, 0, True)
    w_lo, w_hi = max(lo, start - radius), min(hi, start + radius)
    if w_hi <= w_lo:
        return BoundaryUpdate(start, 0.0, 0, True)
    prob = _LocalProblem(i, b, r, budget, state, ch, lp, spec, reallocate, budget.literal)
    limit = max_iters or cfg.max_inner_iters

    phi = start
    converged = False
    it = 0
    for it in range(1, limit + 1):
        best = maximize_1d(lambda x: prob.evaluate(x)[0], Bracket(w_lo, w_hi), tol=0.1 * cfg.base.boundary_tol)
        _, cep, eps, gap = prob.evaluate(best.arg)
        step = abs(best.arg - phi)
        phi = best.arg
        state.inner_iters += 1
        capped = state.rho >= RHO_CAP
        _update_multipliers(state, cep, eps, gap)
        if limit == 1 or (it > 1 and step < cfg.base.boundary_tol):
            converged = True
            break
        if capped:
            break
    if not converged:
        warnings.warn(f"boundary {i}: augmented Lagrangian inner loop did not settle", RuntimeWarning, stacklevel=2)

    def plain(x):
        s0, _ = region_success_and_cep(lo, x, r[i - 1], ch, lp, spec)
        s1, _ = region_success_and_cep(x, hi, r[i], ch, lp, spec)
        return r[i - 1] * s0 + r[i] * s1

    return BoundaryUpdate(phi, plain(phi) - plain(start), it, converged)


# --------------------------------------------------------------------------
# outer loop
# --------------------------------------------------------------------------


def _rate_pass(bounds, budget, ch, lp, cfg, warm):
    out = []
    for k in range(len(bounds) - 1):
        w = None if warm is None else warm[k]
        out.append(constrained_rate(bounds[k], bounds[k + 1], budget.eps_region[k], ch, lp, cfg, warm=w))
    return out


def _perturb(bounds, bad, ch, top, shrink=False):
    """Move each offending region's edges halfway to the equal-mass split.

    With ``shrink`` (used once that move stops changing anything) each
    offending region instead gives up half of its probability mass, which
    raises its share of the budget and lowers its error floor.
    """
    size = len(bounds) - 1
    new = list(bounds)
    if shrink:
        for k in bad:
            lo, hi = float(ch.cdf(new[k])), float(ch.cdf(new[k + 1]))
            if k > 0:
                new[k] = float(ch.inv_cdf(0.75 * lo + 0.25 * hi if k < size - 1 else 0.5 * (lo + hi)))
            if k < size - 1:
                new[k + 1] = float(ch.inv_cdf(0.25 * lo + 0.75 * hi if k > 0 else 0.5 * hi))
    else:
        target = equal_mass_boundaries(ch, size, top)
        for k in bad:
            for j in (k, k + 1):
                if 0 < j < size:
                    new[j] = 0.5 * (new[j] + target[j])
    for j in range(1, size):
        new[j] = min(max(new[j], new[j - 1]), new[j + 1])
    return new


def _aitken(history, top):
    """Extrapolated boundaries from the last three iterates, or None."""
    b0, b1, b2 = (np.asarray(h) for h in history[-3:])
    d1, d2 = b1 - b0, b2 - b1
    den = float(d1 @ d1)
    if den == 0:
        return None
    q = float(d2 @ d1) / den
    # only a steady, well-aligned contraction is extrapolated
    cos = float(d2 @ d1) / math.sqrt(den * float(d2 @ d2) or 1.0)
    if not (0.0 < q < 0.95 and cos > 0.99):
        return None
    new = b2 + d2 * min(q / (1.0 - q), 20.0)
    new[0], new[-1] = 0.0, top
    new = np.maximum.accumulate(np.clip(new, 0.0, top))
    return [float(x) for x in new]


def run_algorithm2(
    ch: ChannelModel,
    lp: LinkParams,
    size: int,
    eps_m: float,
    cfg: ConstrainedConfig | None = None,
    init_boundaries: Sequence[float] | None = None,
):
    """Alternate budget split, constrained rates and penalised boundary moves.

    Returns ``(scheme, budget, report, feasible)``.  ``feasible`` is true
    only when the outer loop settled and the realised total error mass is
    within ``eps_m``.  ``report.trace`` has one entry per completed rate
    pass, i.e. per outer iteration.
    """
    cfg = cfg or ConstrainedConfig()
    base = cfg.base
    if size < 1:
        raise ValueError("need at least one region")
    if not 0 < eps_m < 1:
        raise ValueError("eps_m must lie in (0, 1)")
    top = ch.upper_truncation(base.quadrature.tail_mass)
    if init_boundaries is None:
        bounds = equal_mass_boundaries(ch, size, top)
    else:
        inner = [min(max(float(x), 0.0), top) for x in init_boundaries]
        if len(inner) != size - 1 or any(y < x for x, y in zip(inner, inner[1:])):
            raise ValueError("init_boundaries must be size-1 non-decreasing interior points")
        bounds = [0.0] + inner + [top]
    beta = cfg.beta if cfg.beta is not None else 1.0 / eps_m
    spec = base.quadrature

    trace = []
    restarts = 0
    warm = None
    converged = infeasible = shrink = False
    it = 0
    prev_bounds = None
    rates = None
    history = []
    accepted = None  # (bounds, goodput, warm) of the last accepted iterate
    radius = math.inf
    since_jump = 0
    while it < base.max_outer_iters:
        it += 1
        budget = _allocate_tolerant(bounds, ch, eps_m, cfg.paper_exact_alloc)
        sols = _rate_pass(bounds, budget, ch, lp, cfg, warm)
        bad = [k for k, s in enumerate(sols) if s.status == RateStatus.INFEASIBLE]
        if bad:
            restarts += 1
            if restarts > cfg.max_restarts:
                infeasible = True
                break
            moved = _perturb(bounds, bad, ch, top, shrink)
            if not shrink and max(abs(x - y) for x, y in zip(moved, bounds)) <= 1e-12 * top:
                shrink = True
                moved = _perturb(bounds, bad, ch, top, shrink)
            bounds = moved
            warm = prev_bounds = None
            continue
        warm = [s.unconstrained for s in sols]
        rates = [s.rate for s in sols]
        rep = scheme_totals(QuantizationScheme(tuple(bounds), tuple(rates)), ch, lp, spec)
        if cfg.warm_duals and accepted is not None and rep.total_goodput < accepted[1] * (1 - 1e-12):
            # the linearised step overshot: go back and shrink the step size
            step = max(abs(x - y) for x, y in zip(bounds, accepted[0]))
            radius = 0.25 * step
            bounds, warm = list(accepted[0]), accepted[2]
            history, since_jump, prev_bounds = [], 0, None
            continue
        if cfg.warm_duals:
            accepted = (list(bounds), rep.total_goodput, warm)
            radius *= 2.0
        trace.append(TraceEntry(tuple(bounds), tuple(rates), rep.total_goodput, rep.total_cep))
        if size == 1 or (
            prev_bounds is not None and max(abs(x - y) for x, y in zip(bounds, prev_bounds)) < base.conv_tol
        ):
            converged = True
            break
        if cfg.warm_duals:
            lam0 = np.array([
                rate_multiplier(bounds[k], bounds[k + 1], s.rate, ch, lp, spec) / beta
                if s.status == RateStatus.BACKED_OFF else 0.0
                for k, s in enumerate(sols)
            ])
        prev_bounds = list(bounds)
        new = list(bounds)
        for k in range(size - 1, 0, -1):
            rho = cfg.warm_rho if cfg.warm_duals else cfg.rho_init
            st = AugLagState.fresh(size, rho, beta, cfg.paper_exact_updates)
            if cfg.warm_duals:
                st.lam = lam0.copy()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                upd = aug_boundary_update(
                    k, new, rates, budget, st, ch, lp, cfg,
                    max_iters=1 if cfg.warm_duals else None, reallocate=cfg.warm_duals,
                    radius=radius if cfg.warm_duals else math.inf,
                )
            new[k] = upd.phi
        history.append(new)
        since_jump += 1
        if cfg.accelerate and since_jump >= 3 and len(history) >= 3:
            jump = _aitken(history, top)
            if jump is not None:
                new, history, since_jump = jump, [], 0
        bounds = new

    if rates is None or infeasible:
        budget = _allocate_tolerant(bounds, ch, eps_m, cfg.paper_exact_alloc)
        rates = [s.rate for s in _rate_pass(bounds, budget, ch, lp, cfg, None)]
    scheme = QuantizationScheme(tuple(bounds), tuple(rates))
    rep = scheme_totals(scheme, ch, lp, spec)
    rep.iterations = it
    rep.trace = trace
    rep.converged = converged
    feasible = bool(converged and not infeasible and rep.total_cep <= eps_m * (1 + 1e-9))
    return scheme, budget, rep, feasible
