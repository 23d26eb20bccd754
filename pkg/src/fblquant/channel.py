"""Fading-power distributions for gamma = |h|^2.

All shipped models have unit mean power unless ``Rayleigh(mean_power=...)``
says otherwise, so the transmit SNR alone sets the average receive SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import interpolate, special, stats

from .numerics import Bracket, QuadratureSpec, find_root, integrate

__all__ = [
    "ChannelModel",
    "Rayleigh",
    "Rician",
    "Custom",
    "DegenerateRegionError",
    "TruncatedMoment",
    "load_table",
    "marcum_q1",
]


class DegenerateRegionError(ValueError):
    """A gain interval carries (numerically) no probability mass."""


class TruncatedMoment(NamedTuple):
    lo: float
    hi: float
    mean: float


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b).

    Uses the identity Q1(a, b) = P(X > b^2) for X noncentral chi-square with
    two degrees of freedom and noncentrality a^2.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return stats.ncx2.sf(b * b, 2, a * a)[()] if np.all(a > 0) else stats.chi2.sf(b * b, 2)[()]


def _check_gain(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("channel gain must be non-negative")
    return g


class ChannelModel:
    """Base class: subclasses provide ``pdf``, ``cdf`` and ``sf``.

    Generic numeric fallbacks are supplied for the inverse cdf, truncated
    moments and the tail truncation point.
    """

    quad = QuadratureSpec()

    def pdf(self, gamma):
        raise NotImplementedError

    def cdf(self, gamma):
        raise NotImplementedError

    def sf(self, gamma):
        return 1.0 - self.cdf(gamma)

    def mass(self, lo: float, hi: float) -> float:
        """F(hi) - F(lo), computed from whichever side is more accurate."""
        c = float(self.cdf(lo))
        if c < 0.5:
            return float(self.cdf(hi)) - c
        return float(self.sf(lo) - self.sf(hi))

    def inv_cdf(self, p: float) -> float:
        if not 0 <= p < 1:
            raise ValueError("inv_cdf needs 0 <= p < 1; use upper_truncation for the tail")
        if p == 0:
            return 0.0
        hi = 1.0
        while self.cdf(hi) < p:
            hi *= 2.0
        return find_root(lambda g: float(self.cdf(g)) - p, Bracket(0.0, hi), tol=1e-15)

    def upper_truncation(self, tail_mass: float) -> float:
        """Smallest gain whose tail probability 1 - F is at most ``tail_mass``."""
        if not 0 < tail_mass < 1:
            raise ValueError("tail_mass must lie in (0, 1)")
        hi = 1.0
        while self.sf(hi) > tail_mass:
            hi *= 2.0
        lo = 0.0 if hi == 1.0 else hi / 2.0
        if self.sf(lo) <= tail_mass:
            return lo
        target = math.log(tail_mass)
        x = find_root(
            lambda g: math.log(max(float(self.sf(g)), 1e-300)) - target, Bracket(lo, hi), tol=1e-14
        )
        while self.sf(x) > tail_mass:
            x = np.nextafter(x, math.inf)
        return float(x)

    def partial_mean(self, lo: float, hi: float) -> float:
        """Integral of gamma f(gamma) over [lo, hi]."""
        return integrate(lambda g: g * self.pdf(g), lo, hi, self.quad)

    def truncated_mean(self, lo: float, hi: float) -> float:
        """E[gamma | lo <= gamma <= hi]."""
        m = self.mass(lo, hi)
        if not m > 1e-14:
            raise DegenerateRegionError(f"region [{lo}, {hi}] has mass {m:.3g}")
        mean = self.partial_mean(lo, hi) / m
        return float(min(max(mean, lo), hi))

    def truncated_moment(self, lo: float, hi: float) -> TruncatedMoment:
        return TruncatedMoment(lo, hi, self.truncated_mean(lo, hi))

    def sample(self, u):
        """Inverse-cdf transform of uniforms in [0, 1)."""
        return np.array([self.inv_cdf(float(x)) for x in np.ravel(u)]).reshape(np.shape(u))


@dataclass(frozen=True)
class Rayleigh(ChannelModel):
    """Exponentially distributed power with the given mean."""

    mean_power: float = 1.0

    def __post_init__(self):
        if not self.mean_power > 0:
            raise ValueError("mean_power must be positive")

    @property
    def name(self) -> str:
        return "rayleigh"

    def pdf(self, gamma):
        g = _check_gain(gamma)
        m = self.mean_power
        return (np.exp(-g / m) / m)[()]

    def cdf(self, gamma):
        g = _check_gain(gamma)
        return (-np.expm1(-g / self.mean_power))[()]

    def sf(self, gamma):
        g = _check_gain(gamma)
        return np.exp(-g / self.mean_power)[()]

    def mass(self, lo, hi):
        m = self.mean_power
        return float(math.exp(-lo / m) * -math.expm1(-(hi - lo) / m))

    def inv_cdf(self, p):
        if not 0 <= p < 1:
            raise ValueError("inv_cdf needs 0 <= p < 1; use upper_truncation for the tail")
        return float(-self.mean_power * math.log1p(-p))

    def upper_truncation(self, tail_mass):
        if not 0 < tail_mass < 1:
            raise ValueError("tail_mass must lie in (0, 1)")
        x = -self.mean_power * math.log(tail_mass)
        while self.sf(x) > tail_mass:
            x = np.nextafter(x, math.inf)
        return float(x)

    def partial_mean(self, lo, hi):
        m = self.mean_power
        upper = 0.0 if math.isinf(hi) else (hi + m) * math.exp(-hi / m)
        return float((lo + m) * math.exp(-lo / m) - upper)

    def sample(self, u):
        return -self.mean_power * np.log1p(-np.asarray(u, dtype=float))


@dataclass(frozen=True)
class Rician(ChannelModel):
    """Unit-mean Rician power: 2(K+1) gamma is noncentral chi-square(2, 2K)."""

    k_factor: float = 10.0

    def __post_init__(self):
        if not self.k_factor >= 0:
            raise ValueError("k_factor must be >= 0")

    @classmethod
    def from_db(cls, k_db: float) -> "Rician":
        return cls(10.0 ** (k_db / 10.0))

    @property
    def name(self) -> str:
        return "rician"

    def pdf(self, gamma):
        g = _check_gain(gamma)
        k = self.k_factor
        x = 2.0 * np.sqrt(g * k * (k + 1.0))
        return ((k + 1.0) * np.exp(x - k - (k + 1.0) * g) * special.i0e(x))[()]

    def cdf(self, gamma):
        g = _check_gain(gamma)
        k = self.k_factor
        x = 2.0 * (k + 1.0) * g
        # chndtr underflows for tiny x; there the series e^-K (x/2)(1 + (K/2 - 1/2) x/2) is exact to O(x^2)
        small = x < 1e-8
        with np.errstate(invalid="ignore"):
            out = np.where(small, math.exp(-k) * 0.5 * x * (1.0 + (0.5 * k - 0.5) * 0.5 * x),
                           special.chndtr(np.where(small, 1.0, x), 2.0, 2.0 * k))
        return out[()]

    def sf(self, gamma):
        g = _check_gain(gamma)
        k = self.k_factor
        x = 2.0 * (k + 1.0) * g
        if k == 0:
            return np.exp(-0.5 * x)[()]
        return stats.ncx2.sf(x, 2.0, 2.0 * k)[()]

    def sample(self, u):
        k = self.k_factor
        u = np.asarray(u, dtype=float)
        if k == 0:
            return -np.log1p(-u)
        return special.chndtrix(u, 2.0, 2.0 * k) / (2.0 * (k + 1.0))


@dataclass(frozen=True, eq=False)
class Custom(ChannelModel):
    """Caller-supplied distribution. ``inv_cdf`` is optional."""

    pdf_fn: Callable = field(repr=False)
    cdf_fn: Callable = field(repr=False)
    inv_cdf_fn: Callable | None = field(default=None, repr=False)
    label: str = "custom"

    @property
    def name(self) -> str:
        return self.label

    def pdf(self, gamma):
        return np.asarray(self.pdf_fn(_check_gain(gamma)), dtype=float)[()]

    def cdf(self, gamma):
        return np.asarray(self.cdf_fn(_check_gain(gamma)), dtype=float)[()]

    def inv_cdf(self, p):
        if self.inv_cdf_fn is None:
            return super().inv_cdf(p)
        if not 0 <= p < 1:
            raise ValueError("inv_cdf needs 0 <= p < 1; use upper_truncation for the tail")
        return float(self.inv_cdf_fn(p))


def load_table(path, label: str | None = None) -> Custom:
    """Build a channel from a two-column ``gamma pdf`` text table.

    Columns are whitespace separated and gamma must be strictly increasing.
    The density is interpolated with a monotone cubic (PCHIP), renormalised
    to unit mass over the table range and taken as zero outside it.
    """
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (gamma, pdf), got {data.shape[1]}")
    g, p = data[:, 0], data[:, 1]
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{path}: gamma column must be strictly increasing")
    if g[0] < 0 or np.any(p < 0):
        raise ValueError(f"{path}: gamma and pdf must be non-negative")
    interp = interpolate.PchipInterpolator(g, p, extrapolate=False)
    anti = interp.antiderivative()
    total = float(anti(g[-1]))
    lo, hi = g[0], g[-1]

    def pdf(x):
        x = np.asarray(x, dtype=float)
        out = np.where((x >= lo) & (x <= hi), interp(np.clip(x, lo, hi)), 0.0)
        return np.maximum(out, 0.0) / total

    def cdf(x):
        x = np.clip(np.asarray(x, dtype=float), lo, hi)
        return np.clip(anti(x) / total, 0.0, 1.0)

    return Custom(pdf, cdf, label=label or str(path))
