"""Independent checks: exhaustive grid search and Monte-Carlo link simulation.

The grid search shares only the pointwise error model and the region
integrals with the optimizers; rates come from plain scans followed by a
bounded golden-section search, and boundaries from brute force.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import interpolate

from .channel import ChannelModel, DegenerateRegionError
from .constrained import allocate_cep, constrained_rate
from .fbl import (
    LinkParams,
    QuantizationScheme,
    capacity,
    omega,
    omega_arg,
    region_success_and_cep,
    region_success_curve,
    scheme_totals,
)
from .numerics import Bracket, QuadratureSpec, gauss_q, integrate, maximize_1d

__all__ = [
    "GridSpec",
    "McSpec",
    "GridResult",
    "McResult",
    "CostGuardError",
    "NoFeasibleCell",
    "best_region_rate",
    "check_grid_cost",
    "grid_search",
    "monte_carlo_goodput",
]


class CostGuardError(ValueError):
    """The requested grid is too large to enumerate."""


class NoFeasibleCell(ValueError):
    """No grid cell meets the error budget."""


@dataclass(frozen=True)
class GridSpec:
    """Grid sizes for :func:`grid_search`.

    The first level places ``boundary_grid`` log-spaced points between the
    ``edge_prob`` and ``1 - edge_prob`` quantiles.  Each refinement level
    shrinks the log span around the incumbent tenfold and uses
    ``refine_points`` points per boundary.
    """

    boundary_grid: int = 60
    rate_grid: int = 200
    refine_levels: int = 2
    refine_points: int = 15
    edge_prob: float = 1e-4
    max_cells: int = 250_000
    polish_top: int = 8

    def __post_init__(self):
        if min(self.boundary_grid, self.rate_grid, self.refine_points) < 2:
            raise ValueError("grid counts must be >= 2")
        if self.refine_levels < 0 or not 0 < self.edge_prob < 0.5:
            raise ValueError("invalid refinement settings")


@dataclass(frozen=True)
class McSpec:
    draws: int
    seed: int = 0
    jobs: int = 1
    chunk: int = 1 << 16

    def __post_init__(self):
        if self.draws < 1:
            raise ValueError("need at least one draw")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.chunk < 2 or self.chunk % 2:
            raise ValueError("chunk must be a positive even number")


class GridResult(NamedTuple):
    scheme: QuantizationScheme
    goodput: float


class McResult(NamedTuple):
    goodput: float
    std_error: float
    cep: float
    cep_std_error: float
    draws: int


# --------------------------------------------------------------------------
# per-region pieces
# --------------------------------------------------------------------------


def best_region_rate(lo, hi, ch: ChannelModel, lp: LinkParams, r_max: float, count: int = 200, spec=None):
    """Goodput-maximising rate of one region by scan plus golden section.

    Returns ``(rate, goodput)`` in nats.
    """
    if hi <= lo or ch.mass(lo, hi) <= 0:
        return 0.0, 0.0
    grid = np.linspace(0.0, r_max, count)
    vals = grid * region_success_curve(lo, hi, grid, ch, lp, spec)
    k = int(np.argmax(vals))
    if vals[k] <= 0:
        return 0.0, 0.0
    br = Bracket(grid[max(k - 1, 0)], grid[min(k + 1, count - 1)])
    best = maximize_1d(lambda r: r * region_success_and_cep(lo, hi, r, ch, lp, spec)[0], br, tol=1e-10)
    if best.val < vals[k]:
        return float(grid[k]), float(vals[k])
    return best.arg, best.val


class _PairTable:
    """Rate -> (success mass, log error mass) for one region, with the
    largest rate meeting a given error budget found by interpolation."""

    def __init__(self, lo, hi, ch, lp, r_opt, count, spec):
        self.mass = ch.mass(lo, hi)
        self.r_opt = r_opt
        try:
            self.mean = ch.truncated_mean(lo, hi)
        except DegenerateRegionError:
            self.mean = 0.5 * (lo + hi)
        if r_opt <= 0 or self.mass <= 0:
            self.rates = None
            return
        small = r_opt * np.logspace(-9, -2, 8)
        rates = np.unique(np.concatenate([small, np.linspace(r_opt / count, r_opt, count)]))
        s, c = _success_cep_curve(lo, hi, rates, ch, lp, spec)
        logc = np.log(np.maximum(c, 1e-300))
        # keep a strictly increasing error curve for the inverse map
        keep = np.concatenate([[True], np.diff(logc) > 0])
        self.rates = rates[keep]
        self.logc = logc[keep]
        self.s_of_r = interpolate.PchipInterpolator(rates, s)
        self.r_of_logc = interpolate.PchipInterpolator(self.logc, self.rates) if self.rates.size > 1 else None

    def evaluate(self, eps):
        """Vectorised over budgets: (rate, goodput, error mass, feasible)."""
        eps = np.asarray(eps, dtype=float)
        if self.rates is None:
            r = np.zeros_like(eps)
            return r, r, np.full_like(eps, self.mass), self.mass <= eps
        le = np.log(eps)
        r = np.where(le >= self.logc[-1], self.r_opt, 0.0)
        mid = (le < self.logc[-1]) & (le >= self.logc[0])
        if self.r_of_logc is not None and np.any(mid):
            r[mid] = np.clip(self.r_of_logc(le[mid]), self.rates[0], self.r_opt)
        good = r * self.s_of_r(r)
        good = np.where(r > 0, good, 0.0)
        cep = np.where(r > 0, np.minimum(eps, np.exp(self.logc[-1])), self.mass)
        feasible = (r > 0) | (self.mass <= eps)
        return r, good, cep, feasible


def _success_cep_curve(lo, hi, rates, ch, lp, spec):
    def f(g):
        t = omega_arg(g[None, :], rates[:, None], lp)
        pdf = ch.pdf(g)[None, :]
        return np.vstack([pdf * gauss_q(-t), pdf * gauss_q(t)])

    spec = spec or QuadratureSpec()
    tight = QuadratureSpec(spec.rel_tol, 1e-25, 4 * spec.max_subdivisions, spec.tail_mass)
    kinks = [float(x) for x in np.expm1(rates) / lp.p_lin if lo < x < hi]
    if lo == 0:
        kinks += [hi * 2.0 ** -k for k in range(1, 60)]
    out = integrate(f, lo, hi, tight, kinks)
    return out[: rates.size], out[rates.size :]


# --------------------------------------------------------------------------
# grid search
# --------------------------------------------------------------------------


def _initial_grid(ch, gs: GridSpec):
    a, b = ch.inv_cdf(gs.edge_prob), ch.inv_cdf(1.0 - gs.edge_prob)
    return np.geomspace(a, b, gs.boundary_grid)


def _zoom(center, half_log, count, top):
    pts = center * np.exp(np.linspace(-half_log, half_log, count))
    return np.unique(np.clip(np.append(pts, center), 0.0, top))


def _layers_for_level(level, inc, ch, gs, top):
    base = _initial_grid(ch, gs)
    if level == 0:
        return [base] * len(inc)
    half = 0.5 * math.log(base[-1] / base[0]) / 10.0**level
    return [_zoom(x, half, gs.refine_points, top) for x in inc]


def _dp(layers, value):
    """Best path 0 -> layer_1 -> ... -> top maximising the sum of region values."""
    prev_nodes = np.array([0.0])
    prev_best = np.array([0.0])
    back = []
    for nodes in layers:
        best = np.full(nodes.size, -np.inf)
        arg = np.zeros(nodes.size, dtype=int)
        for j, x in enumerate(nodes):
            for k, p in enumerate(prev_nodes):
                if p > x or not np.isfinite(prev_best[k]):
                    continue
                v = prev_best[k] + value(p, x)
                if v > best[j]:
                    best[j], arg[j] = v, k
        back.append((prev_nodes, arg))
        prev_nodes, prev_best = nodes, best
    return prev_nodes, prev_best, back


def _unconstrained_grid(ch, lp, size, gs, spec, top, r_max):
    cache = {}

    def value(lo, hi):
        key = (lo, hi)
        if key not in cache:
            cache[key] = best_region_rate(lo, hi, ch, lp, r_max, gs.rate_grid, spec)
        return cache[key][1]

    inc = None
    best_val = -np.inf
    best_b = None
    for level in range(gs.refine_levels + 1):
        layers = _layers_for_level(level, inc if inc is not None else [0.0] * (size - 1), ch, gs, top)
        nodes, vals, back = _dp(layers + [np.array([top])], value)
        if vals[0] > best_val:
            path = [top]
            j = 0
            for prev_nodes, arg in reversed(back):
                j = arg[j]
                path.append(prev_nodes[j])
            b = path[::-1]
            best_val, best_b = float(vals[0]), b
        inc = best_b[1:-1]
    rates = []
    for lo, hi in zip(best_b[:-1], best_b[1:]):
        value(lo, hi)
        rates.append(cache[(lo, hi)][0])
    return best_b, rates


def _cells(layers):
    grids = np.meshgrid(*layers, indexing="ij")
    cells = np.stack([g.ravel() for g in grids], axis=1)
    ok = np.all(np.diff(cells, axis=1) >= 0, axis=1) if cells.shape[1] > 1 else np.ones(len(cells), bool)
    return cells[ok]


def _constrained_grid(ch, lp, size, eps_m, gs, spec, top, r_max):
    tables = {}

    def table(lo, hi):
        key = (lo, hi)
        if key not in tables:
            r_opt, _ = best_region_rate(lo, hi, ch, lp, r_max, gs.rate_grid, spec)
            tables[key] = _PairTable(lo, hi, ch, lp, r_opt, gs.rate_grid, spec)
        return tables[key]

    def score(cells):
        n = len(cells)
        full = np.hstack([np.zeros((n, 1)), cells, np.full((n, 1), top)])
        means = np.empty((n, size))
        pair_ids = []
        for k in range(size):
            pairs, inv = np.unique(full[:, k : k + 2], axis=0, return_inverse=True)
            inv = inv.ravel()
            tabs = [table(float(a), float(b)) for a, b in pairs]
            means[:, k] = np.array([t.mean for t in tabs])[inv]
            pair_ids.append((tabs, inv))
        inv_sq = 1.0 / np.maximum(means * means, 1e-300)
        eps = eps_m * inv_sq / inv_sq.sum(axis=1, keepdims=True)
        total = np.zeros(n)
        feas = np.ones(n, dtype=bool)
        for k, (tabs, inv) in enumerate(pair_ids):
            for p, t in enumerate(tabs):
                sel = np.flatnonzero(inv == p)
                _, g, _, f = t.evaluate(eps[sel, k])
                total[sel] += g
                feas[sel] &= f
        return np.where(feas, total, -np.inf)

    def exact(inner):
        b = [0.0] + [float(x) for x in inner] + [top]
        try:
            budget = allocate_cep(b, ch, eps_m)
        except DegenerateRegionError:
            return -np.inf, None
        rates = []
        for k in range(size):
            sol = constrained_rate(b[k], b[k + 1], budget.eps_region[k], ch, lp)
            if sol.status == "infeasible-region":
                return -np.inf, None
            rates.append(sol.rate)
        sc = QuantizationScheme(tuple(b), tuple(rates))
        rep = scheme_totals(sc, ch, lp, spec)
        if rep.total_cep > eps_m * (1 + 1e-9):
            return -np.inf, None
        return rep.total_goodput, sc

    best_val, best_sc, inc = -np.inf, None, None
    for level in range(gs.refine_levels + 1):
        layers = _layers_for_level(level, inc if inc is not None else [0.0] * (size - 1), ch, gs, top)
        cells = _cells(layers)
        if len(cells) > gs.max_cells:
            raise CostGuardError(f"{len(cells)} cells exceed max_cells={gs.max_cells}; use fewer regions or a coarser grid")
        sc_vals = score(cells)
        order = np.argsort(-sc_vals, kind="stable")[: gs.polish_top]
        for j in order:
            if not np.isfinite(sc_vals[j]):
                break
            v, sc = exact(cells[j])
            if v > best_val:
                best_val, best_sc = v, sc
        if best_sc is None:
            raise NoFeasibleCell(f"no grid cell meets eps_m={eps_m:g}")
        inc = list(best_sc.boundaries[1:-1])
    return best_sc, best_val


def check_grid_cost(size: int, spec: GridSpec | None = None, eps_m: float | None = None) -> None:
    """Raise :class:`CostGuardError` if :func:`grid_search` would be too large.

    Unconstrained searches allow at most three regions.  Constrained ones
    allow at most ``spec.max_cells`` first-level cells.
    """
    gs = spec or GridSpec()
    if size < 1:
        raise ValueError("need at least one region")
    if eps_m is None and size > 3:
        raise CostGuardError(f"unconstrained grid search is limited to 3 regions (got {size}); use fewer regions")
    if eps_m is not None:
        if not 0 < eps_m < 1:
            raise ValueError("eps_m must lie in (0, 1)")
        est = math.comb(gs.boundary_grid, size - 1)
        if est > gs.max_cells:
            raise CostGuardError(
                f"~{est} cells exceed max_cells={gs.max_cells}; use fewer regions or a smaller boundary_grid"
            )


def grid_search(
    ch: ChannelModel,
    lp: LinkParams,
    size: int,
    spec: GridSpec | None = None,
    eps_m: float | None = None,
    quad: QuadratureSpec | None = None,
) -> GridResult:
    """Exhaustive search over boundary grids with iterative refinement.

    Without ``eps_m`` each region takes its goodput-maximising rate and the
    boundaries are found by dynamic programming over the grid.  With
    ``eps_m`` the budget is split by :func:`allocate_cep` in every cell,
    each region takes the best rate meeting its share, cells that cannot
    meet the budget are dropped, and the best few cells per level are
    re-scored exactly.  Goodput is returned in nats.

    Unconstrained grids are limited to three regions and constrained ones
    to ``spec.max_cells`` cells.
    """
    gs = spec or GridSpec()
    quad = quad or QuadratureSpec()
    check_grid_cost(size, gs, eps_m)
    top = ch.upper_truncation(quad.tail_mass)
    r_max = float(capacity(top, lp))
    if size == 1:
        if eps_m is None:
            r, g = best_region_rate(0.0, top, ch, lp, r_max, gs.rate_grid, quad)
            return GridResult(QuantizationScheme((0.0, top), (r,)), g)
        sol = constrained_rate(0.0, top, eps_m, ch, lp)
        if sol.status == "infeasible-region":
            raise NoFeasibleCell(f"a single region cannot meet eps_m={eps_m:g}")
        sc = QuantizationScheme((0.0, top), (sol.rate,))
        return GridResult(sc, scheme_totals(sc, ch, lp, quad).total_goodput)
    if eps_m is None:
        b, rates = _unconstrained_grid(ch, lp, size, gs, quad, top, r_max)
        sc = QuantizationScheme(tuple(b), tuple(rates))
        return GridResult(sc, scheme_totals(sc, ch, lp, quad).total_goodput)
    sc, val = _constrained_grid(ch, lp, size, eps_m, gs, quad, top, r_max)
    return GridResult(sc, val)


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


def _mc_chunk(args):
    scheme, ch, lp, seed, start, count = args
    bg = np.random.Philox(key=seed)
    bg.advance(start // 2)  # one counter step yields two draws
    u = np.random.Generator(bg).random(2 * count).reshape(count, 2)
    gamma = ch.sample(u[:, 0])
    idx = scheme.region_index(gamma)
    rates = np.asarray(scheme.rates)[idx]
    p_err = np.where(rates > 0, omega(gamma, rates, lp), 1.0)
    ok = u[:, 1] >= p_err
    g = np.where(ok, rates, 0.0)
    fail = (~ok).astype(float)
    return g.sum(), (g * g).sum(), fail.sum()


def monte_carlo_goodput(scheme: QuantizationScheme, ch: ChannelModel, lp: LinkParams, spec: McSpec) -> McResult:
    """Simulate the feedback link draw by draw.

    Draw ``d`` uses the uniforms at positions 2d and 2d+1 of a Philox stream
    keyed by the seed: the first picks the gain by inverse-cdf sampling,
    the second decides success against 1 - omega.  A zero-rate region is a
    failure.  Chunk sums are combined with ``math.fsum``, so the result does
    not depend on ``spec.jobs``.  Goodput is in nats.
    """
    n = spec.draws
    starts = list(range(0, n, spec.chunk))
    tasks = [(scheme, ch, lp, spec.seed, s, min(spec.chunk, n - s)) for s in starts]
    if spec.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            parts = list(pool.map(_mc_chunk, tasks))
    else:
        parts = [_mc_chunk(t) for t in tasks]
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    nf = math.fsum(p[2] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    cep = nf / n
    cep_var = cep * (1.0 - cep) * n / max(n - 1, 1)
    return McResult(mean, math.sqrt(var / n), cep, math.sqrt(cep_var / n), n)
