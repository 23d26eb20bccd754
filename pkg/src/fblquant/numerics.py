"""Numerical building blocks: Gaussian tail, Bessel I0, quadrature, roots and 1-D maxima.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, special

__all__ = [
    "QuadratureSpec",
    "Bracket",
    "Maximum",
    "QuadratureError",
    "NoRootError",
    "gauss_q",
    "gauss_q_inv",
    "log_gauss_cdf",
    "gauss_pdf",
    "bessel_i0",
    "bessel_i0e",
    "integrate",
    "find_root",
    "maximize_1d",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance.

    The best estimate and its error bound are kept on the exception so a
    caller can decide whether the partial answer is good enough.
    """

    def __init__(self, estimate, error_bound, message="quadrature tolerance not met"):
        super().__init__(f"{message}: estimate={estimate!r}, error bound={error_bound!r}")
        self.estimate = estimate
        self.error_bound = error_bound


class NoRootError(ValueError):
    """The bracket passed to :func:`find_root` has no sign change."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate`.

    ``tail_mass`` is not used by the integrator itself; it tells callers where
    to cut semi-infinite channel integrals (see ``channel.upper_truncation``).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    tail_mass: float = 1e-12

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.tail_mass > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"bracket ends must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


class Maximum(NamedTuple):
    arg: float
    val: float
    at_boundary: bool = False


# --------------------------------------------------------------------------
# special functions
# --------------------------------------------------------------------------


def gauss_q(t):
    """Gaussian tail probability Q(t) = P(Z > t), Z standard normal."""
    return special.ndtr(-np.asarray(t, dtype=float))[()]


def log_gauss_cdf(t):
    """log(1 - Q(t)), accurate deep into the lower tail."""
    return special.log_ndtr(np.asarray(t, dtype=float))[()]


def gauss_pdf(t):
    t = np.asarray(t, dtype=float)
    return (np.exp(-0.5 * t * t) / _SQRT_2PI)[()]


def gauss_q_inv(p):
    """Inverse of :func:`gauss_q` on (0, 1).

    Starts from ``-ndtri(p)`` and applies one Newton step against ``gauss_q``
    in log space, which keeps the polish well conditioned for tiny ``p``.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ValueError("gauss_q_inv needs 0 < p < 1")
    t = -special.ndtri(p)
    # Newton on log Q(t) - log p; d/dt log Q(t) = -pdf(t)/Q(t)
    q = special.ndtr(-t)
    step = (np.log(q) - np.log(p)) * q / gauss_pdf(t)
    return (t + step)[()]


def bessel_i0(x):
    """Modified Bessel function I0.

    Raises ``OverflowError`` where the result is not representable; use
    :func:`bessel_i0e` there.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 713.0):
        raise OverflowError("I0 overflows for |x| > ~713; use bessel_i0e")
    return special.i0(x)[()]


def bessel_i0e(x):
    """Exponentially scaled Bessel function exp(-|x|) I0(x)."""
    return special.i0e(np.asarray(x, dtype=float))[()]


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(20)
_NODES = np.concatenate([_GL_LO[0], _GL_HI[0]])
_N_LO = _GL_LO[0].size


def _panel_rules(f, a, b):
    """Return (high-order estimate, error estimate, vector flag); arrays are (m, k)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    raw = np.asarray(f(x.ravel()), dtype=float)
    y = np.atleast_2d(raw).reshape(-1, a.size, _NODES.size)
    lo = (y[..., :_N_LO] @ _GL_LO[1]) * half
    hi = (y[..., _N_LO:] @ _GL_HI[1]) * half
    return hi, np.abs(hi - lo), raw.ndim > 1


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec | None = None,
    points: Sequence[float] = (),
):
    """Adaptive panel quadrature of a vectorised integrand over [lo, hi].

    ``f`` receives a 1-D array of abscissae and returns either an array of
    the same length or an ``(m, len)`` array for ``m`` integrands at once,
    in which case an ``(m,)`` array of integrals is returned.  ``points``
    are interior break points (kinks) used as initial panel edges.

    Panels are bisected until each one's Gauss 10/20 disagreement is below
    its length share of ``max(abs_tol, rel_tol * |I|)``, or until the summed
    disagreement over all panels is below that tolerance.
    """
    spec = spec or QuadratureSpec()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("integrate needs finite limits; truncate infinite ranges first")
    if hi == lo:
        probe = np.asarray(f(np.array([lo])), dtype=float)
        return np.zeros(probe.shape[0]) if probe.ndim > 1 else 0.0
    if hi < lo:
        return -integrate(f, hi, lo, spec, points)

    edges = np.unique(np.concatenate([[lo], [p for p in points if lo < p < hi], [hi]]))
    a, b = edges[:-1], edges[1:]
    length = hi - lo
    done_val = done_err = None
    splits = 0
    while True:
        val, err, vector_valued = _panel_rules(f, a, b)
        if done_val is None:
            done_val = np.zeros(val.shape[0])
            done_err = np.zeros(val.shape[0])
        total = done_val + val.sum(axis=1)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        share = (b - a) / length
        ok = np.all(err <= tol[:, None] * share[None, :], axis=0)
        if np.all(done_err + err.sum(axis=1) <= tol):
            # global test: the summed error bound already meets the tolerance
            ok[:] = True
        done_val += val[:, ok].sum(axis=1)
        done_err += err[:, ok].sum(axis=1)
        if ok.all():
            break
        a, b = a[~ok], b[~ok]
        splits += a.size
        if splits > spec.max_subdivisions:
            est = done_val + val[:, ~ok].sum(axis=1)
            bound = done_err + err[:, ~ok].sum(axis=1)
            if not vector_valued:
                est, bound = float(est[0]), float(bound[0])
            raise QuadratureError(est, bound)
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        order = np.argsort(a, kind="stable")
        a, b = a[order], b[order]
    if vector_valued:
        return done_val
    return float(done_val[0])


# --------------------------------------------------------------------------
# roots and maxima
# --------------------------------------------------------------------------


def find_root(g: Callable[[float], float], bracket: Bracket, tol: float = 1e-12) -> float:
    """Root of ``g`` inside ``bracket`` by Brent's bisection/interpolation hybrid."""
    glo, ghi = g(bracket.lo), g(bracket.hi)
    if glo == 0:
        return bracket.lo
    if ghi == 0:
        return bracket.hi
    if glo * ghi > 0:
        raise NoRootError(f"no sign change on [{bracket.lo}, {bracket.hi}]: g={glo!r}, {ghi!r}")
    return float(optimize.brentq(g, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps))


def maximize_1d(f: Callable[[float], float], bracket: Bracket, tol: float = 1e-8) -> Maximum:
    """Local maximum of ``f`` on a bracket (golden section with parabolic steps).

    Endpoints are evaluated explicitly; a maximum that sits on an endpoint is
    returned with ``at_boundary=True``.  Ties go to the smaller argument.
    """
    res = optimize.minimize_scalar(
        lambda x: -f(x), bounds=(bracket.lo, bracket.hi), method="bounded",
        options={"xatol": tol, "maxiter": 500},
    )
    x_in, f_in = float(res.x), float(-res.fun)
    f_lo, f_hi = f(bracket.lo), f(bracket.hi)
    best = Maximum(x_in, f_in, False)
    if f_hi > best.val:
        best = Maximum(bracket.hi, f_hi, True)
    if f_lo >= best.val:
        best = Maximum(bracket.lo, f_lo, True)
    return best
