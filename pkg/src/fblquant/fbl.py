"""Finite-blocklength primitives and per-region goodput / error integrals.

Rates are in nats per channel use throughout; ``LOG2E`` converts to bits
per channel use (bpcu) for reporting only.  The normal approximation makes
the error probability at gain ``gamma`` and rate ``r``

    omega(gamma, r) = Q((C(gamma) - r) * sqrt(n / V(gamma)))

with ``C = ln(1 + P gamma)`` and ``V = 1 - (1 + P gamma)^-2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelModel
from .numerics import QuadratureSpec, gauss_pdf, gauss_q, gauss_q_inv, integrate, log_gauss_cdf

__all__ = [
    "LOG2E",
    "LinkParams",
    "Region",
    "QuantizationScheme",
    "TraceEntry",
    "GoodputReport",
    "capacity",
    "dispersion",
    "omega_arg",
    "omega",
    "log_success",
    "achievable_rate",
    "achievable_rate_clamped",
    "region_success",
    "region_success_curve",
    "region_success_derivatives",
    "region_success_and_cep",
    "region_goodput",
    "region_cep",
    "scheme_totals",
    "to_bpcu",
]

LOG2E = 1.0 / math.log(2.0)


def to_bpcu(nats):
    return np.asarray(nats) * LOG2E if np.ndim(nats) else float(nats) * LOG2E


@dataclass(frozen=True)
class LinkParams:
    """Blocklength ``n`` (channel uses; ``math.inf`` allowed) and linear SNR."""

    n: float
    p_lin: float

    def __post_init__(self):
        if not self.n >= 1:
            raise ValueError("blocklength n must be >= 1")
        if not self.p_lin > 0:
            raise ValueError("SNR must be positive")

    @classmethod
    def from_db(cls, n: float, p_db: float) -> "LinkParams":
        return cls(n, 10.0 ** (p_db / 10.0))

    @property
    def p_db(self) -> float:
        return 10.0 * math.log10(self.p_lin)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.n)


@dataclass(frozen=True)
class Region:
    lo: float
    hi: float
    rate: float

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"region needs 0 <= lo <= hi, got [{self.lo}, {self.hi}]")
        if not self.rate >= 0:
            raise ValueError("rate must be non-negative")


@dataclass(frozen=True)
class QuantizationScheme:
    """Boundaries phi_1 = 0 <= ... <= phi_{K+1} and one rate per region (nats)."""

    boundaries: tuple
    rates: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        r = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "rates", r)
        if len(b) != len(r) + 1:
            raise ValueError("need exactly one more boundary than rates")
        if any(y < x for x, y in zip(b, b[1:])):
            raise ValueError("boundaries must be non-decreasing")
        if b[0] < 0 or any(x < 0 for x in r):
            raise ValueError("boundaries and rates must be non-negative")

    @property
    def size(self) -> int:
        return len(self.rates)

    def regions(self):
        return [Region(self.boundaries[i], self.boundaries[i + 1], self.rates[i]) for i in range(self.size)]

    def region_index(self, gamma):
        """Feedback index (0-based) for each gain, by binary search on the boundaries."""
        inner = np.asarray(self.boundaries[1:-1])
        return np.searchsorted(inner, np.asarray(gamma, dtype=float), side="right")


@dataclass
class TraceEntry:
    boundaries: tuple
    rates: tuple
    goodput: float
    cep: float


@dataclass
class GoodputReport:
    per_region_goodput: list
    per_region_cep: list
    total_cep: float
    iterations: int = 0
    trace: list = field(default_factory=list)
    converged: bool = True

    @property
    def total_goodput(self) -> float:
        """Total goodput in nats per channel use."""
        return float(math.fsum(self.per_region_goodput))

    @property
    def total_goodput_bpcu(self) -> float:
        return self.total_goodput * LOG2E

    @property
    def per_region_goodput_bpcu(self) -> list:
        return [g * LOG2E for g in self.per_region_goodput]


# --------------------------------------------------------------------------
# pointwise quantities
# --------------------------------------------------------------------------


def capacity(gamma, lp: LinkParams):
    return np.log1p(lp.p_lin * np.asarray(gamma, dtype=float))[()]


def dispersion(gamma, lp: LinkParams):
    x = 1.0 + lp.p_lin * np.asarray(gamma, dtype=float)
    return (1.0 - 1.0 / (x * x))[()]


def omega_arg(gamma, r, lp: LinkParams):
    """Argument of Q in omega; +inf/-inf at gamma = 0 (zero dispersion)."""
    gamma = np.asarray(gamma, dtype=float)
    c = np.log1p(lp.p_lin * gamma)
    x = 1.0 + lp.p_lin * gamma
    v = 1.0 - 1.0 / (x * x)
    diff = c - r
    with np.errstate(divide="ignore", invalid="ignore"):
        if lp.infinite:
            t = np.where(diff > 0, np.inf, np.where(diff < 0, -np.inf, 0.0))
        else:
            t = diff * np.sqrt(lp.n / v)
        t = np.where(v > 0, t, np.where(np.asarray(r) > 0, -np.inf, np.inf))
    return t[()]


def omega(gamma, r, lp: LinkParams):
    """Codeword error probability at gain ``gamma`` and rate ``r`` (nats)."""
    return gauss_q(omega_arg(gamma, r, lp))


def log_success(gamma, r, lp: LinkParams):
    """log(1 - omega), finite far into the region where success is rare."""
    return log_gauss_cdf(omega_arg(gamma, r, lp))


def achievable_rate(lp: LinkParams, gamma, eps):
    """Normal-approximation rate C - sqrt(V/n) Q^-1(eps); may be negative."""
    return (capacity(gamma, lp) - np.sqrt(dispersion(gamma, lp) / lp.n) * gauss_q_inv(eps))[()]


def achievable_rate_clamped(lp: LinkParams, gamma, eps):
    return np.maximum(achievable_rate(lp, gamma, eps), 0.0)[()]


# --------------------------------------------------------------------------
# region integrals
# --------------------------------------------------------------------------


def _region_spec(ch: ChannelModel, lo: float, hi: float, spec: QuadratureSpec) -> QuadratureSpec:
    # tighten the absolute floor for low-mass regions so their integrals keep relative accuracy
    m = ch.mass(lo, hi)
    floor = min(spec.abs_tol, spec.rel_tol * max(m, 1e-290))
    if floor == spec.abs_tol:
        return spec
    return QuadratureSpec(spec.rel_tol, floor, spec.max_subdivisions, spec.tail_mass)


def _kinks(lo, hi, rates, lp):
    a = np.expm1(np.atleast_1d(rates)) / lp.p_lin
    return [float(x) for x in a if lo < x < hi]


def region_success(lo, hi, r, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None):
    """Integral of f(gamma)(1 - omega(gamma, r)) over [lo, hi]."""
    spec = spec or QuadratureSpec()
    return integrate(
        lambda g: ch.pdf(g) * gauss_q(-omega_arg(g, r, lp)),
        lo, hi, _region_spec(ch, lo, hi, spec), _kinks(lo, hi, r, lp),
    )


def region_success_curve(lo, hi, rates, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None):
    """:func:`region_success` for many rates in one vectorised quadrature."""
    spec = spec or QuadratureSpec()
    rates = np.asarray(rates, dtype=float)

    def f(g):
        t = omega_arg(g[None, :], rates[:, None], lp)
        return ch.pdf(g)[None, :] * gauss_q(-t)

    return integrate(f, lo, hi, _region_spec(ch, lo, hi, spec), _kinks(lo, hi, rates, lp))


def _region_omega(lo, hi, r, ch, lp, spec):
    return integrate(
        lambda g: ch.pdf(g) * gauss_q(omega_arg(g, r, lp)),
        lo, hi, _region_spec(ch, lo, hi, spec), _kinks(lo, hi, r, lp),
    )


def region_success_derivatives(lo, hi, r, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None):
    """Success mass S(r) and its first two rate derivatives.

    S'(r) is the integral of H(gamma, r) = -phi(t) f sqrt(n/V) and
    S''(r) the integral of H n (C - r) / V, with t the omega argument.
    """
    spec = spec or QuadratureSpec()
    if lp.infinite:
        raise ValueError("rate derivatives need finite n")

    def f(g):
        pdf = ch.pdf(g)
        x = 1.0 + lp.p_lin * g
        v = 1.0 - 1.0 / (x * x)
        c = np.log1p(lp.p_lin * g)
        t = omega_arg(g, r, lp)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(v > 0, np.sqrt(lp.n / np.where(v > 0, v, 1.0)), 0.0)
            h = np.where(v > 0, -gauss_pdf(np.where(np.isfinite(t), t, 0.0)) * pdf * scale, 0.0)
            h = np.where(np.isfinite(t), h, 0.0)
            h2 = np.where(v > 0, h * lp.n * (c - r) / np.where(v > 0, v, 1.0), 0.0)
        return np.vstack([pdf * gauss_q(-t), h, h2])

    pts = _kinks(lo, hi, r, lp)
    if lo == 0:
        pts += [hi * 2.0 ** -k for k in range(1, 60)]
    s, d1, d2 = integrate(f, lo, hi, _region_spec(ch, lo, hi, spec), pts)
    return float(s), float(d1), float(d2)


def region_success_and_cep(lo, hi, r, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None):
    """Success mass and error mass of a region from one quadrature.

    Both integrands are computed directly (no ``mass - S`` cancellation), and
    the absolute floor is dropped so a tiny error mass keeps relative accuracy.
    """
    spec = spec or QuadratureSpec()
    if hi <= lo:
        return 0.0, 0.0
    if r == 0:
        return 0.0, ch.mass(lo, hi)
    tight = QuadratureSpec(spec.rel_tol, 1e-25, spec.max_subdivisions, spec.tail_mass)

    def f(g):
        t = omega_arg(g, r, lp)
        pdf = ch.pdf(g)
        return np.vstack([pdf * gauss_q(-t), pdf * gauss_q(t)])

    pts = _kinks(lo, hi, r, lp)
    if lo == 0:
        # zero dispersion at gamma = 0: grade panels toward it for tiny rates
        pts += [hi * 2.0 ** -k for k in range(1, 60)]
    s, e = integrate(f, lo, hi, tight, pts)
    return float(s), float(e)


def region_goodput(rg: Region, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None) -> float:
    """r * integral of f (1 - omega) over the region (nats per channel use)."""
    if rg.rate == 0 or rg.hi == rg.lo:
        return 0.0
    return rg.rate * region_success(rg.lo, rg.hi, rg.rate, ch, lp, spec)


def region_cep(rg: Region, ch: ChannelModel, lp: LinkParams, spec: QuadratureSpec | None = None) -> float:
    """Error mass of a region; a zero rate counts the whole region as lost."""
    if rg.hi == rg.lo:
        return 0.0
    if rg.rate == 0:
        return ch.mass(rg.lo, rg.hi)
    return _region_omega(rg.lo, rg.hi, rg.rate, ch, lp, spec or QuadratureSpec())


def scheme_totals(
    scheme: QuantizationScheme,
    ch: ChannelModel,
    lp: LinkParams,
    spec: QuadratureSpec | None = None,
) -> GoodputReport:
    """Per-region goodput and error mass plus the totals.

    An infinite last boundary is replaced by the tail truncation point.
    """
    spec = spec or QuadratureSpec()
    top = ch.upper_truncation(spec.tail_mass)
    goodputs = []
    ceps = []
    for rg in scheme.regions():
        if math.isinf(rg.hi):
            rg = Region(min(rg.lo, top), top, rg.rate)
        goodputs.append(region_goodput(rg, ch, lp, spec))
        ceps.append(region_cep(rg, ch, lp, spec))
    return GoodputReport(goodputs, ceps, float(math.fsum(ceps)))


def scheme_from(boundaries: Sequence[float], rates: Sequence[float]) -> QuantizationScheme:
    return QuantizationScheme(tuple(boundaries), tuple(rates))
