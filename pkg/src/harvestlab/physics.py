"""Integrands, closed forms and negativity for two parallel-accelerated detectors.

Everything is expressed in the dimensionless parameters

    c1 = kappa * L,   c2 = kappa * Omega * sigma**2,   c3 = sigma * Omega.

The transition term E is evaluated from its one-dimensional form (the
Gaussian integral over the centre-of-mass variable done analytically), the
entangling term X from its two-dimensional form over the half plane
``y >= 0``. Both integrals are taken along contours shifted into the complex
plane, so neither integrand oscillates nor meets a pole for real abscissae.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .quadrature import Interval1D, QuadConfig, QuadResult, Rect2D, integrate_1d, integrate_2d

# Truncation at this many Gaussian widths leaves a tail below exp(-64).
TRUNCATION_WIDTHS = 8.0
# Minimum distance of c2 from a multiple of pi.
SINGULAR_GUARD = 1e-6


class InvalidParams(ValueError):
    """A parameter is non-positive, non-finite or sits on a singularity."""


def _check_positive(**values: float) -> None:
    for name, v in values.items():
        try:
            ok = not isinstance(v, bool) and math.isfinite(v) and v > 0
        except TypeError:
            ok = False
        if not ok:
            raise InvalidParams(f"{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class HarvestParams:
    c1: float
    c2: float
    c3: float
    eta0: float = 1.0

    def __post_init__(self):
        _check_positive(c1=self.c1, c2=self.c2, c3=self.c3, eta0=self.eta0)
        k = round(self.c2 / math.pi)
        if abs(self.c2 - k * math.pi) < SINGULAR_GUARD:
            raise InvalidParams(
                f"c2={self.c2!r} is within {SINGULAR_GUARD:g} of {k}*pi; the integrands are singular there"
            )

    @property
    def alpha(self) -> float:
        """Coefficient of the Gaussian exponent, ``(c1*c3 / (2*c2))**2``."""
        return (self.c1 * self.c3 / (2.0 * self.c2)) ** 2

    @property
    def radius(self) -> float:
        """Half-width of the truncated integration domain."""
        return 2.0 * TRUNCATION_WIDTHS * self.c2 / (self.c1 * self.c3)


@dataclass(frozen=True)
class PhysicalParams:
    kappa: float
    L: float
    Omega: float
    sigma: float

    def __post_init__(self):
        _check_positive(kappa=self.kappa, L=self.L, Omega=self.Omega, sigma=self.sigma)


def to_dimensionless(p: PhysicalParams, eta0: float = 1.0) -> HarvestParams:
    """Convert acceleration, separation, gap and window width to (c1, c2, c3)."""
    if not isinstance(p, PhysicalParams):
        raise TypeError("expected PhysicalParams")
    return HarvestParams(
        c1=p.kappa * p.L,
        c2=p.kappa * p.Omega * p.sigma**2,
        c3=p.sigma * p.Omega,
        eta0=eta0,
    )


class Evaluation(NamedTuple):
    value: float | complex
    err: float
    meta: QuadResult


@dataclass(frozen=True)
class Observables:
    E: float
    X: complex
    N: float
    err_E: float
    err_X: float
    converged: bool

    @property
    def signed_N(self) -> float:
        return signed_negativity(self.E, self.X)


def csch2(z):
    """``csch(z)**2`` for complex arrays, without overflow for large ``|Re z|``."""
    z = np.asarray(z, dtype=complex)
    w = np.where(z.real < 0, -z, z)
    q = np.exp(-2.0 * w)
    return 4.0 * q / (1.0 - q) ** 2


@numba.njit(cache=True)
def _e_kernel(y, c1, c2, alpha):
    fy = y
    fo = np.empty(y.size, dtype=np.complex128)
    for i in range(fy.size):
        z = complex(0.5 * c1 * fy[i], -c2)
        if z.real < 0.0:
            z = -z
        q = cmath.exp(-2.0 * z)
        d = 1.0 - q
        fo[i] = math.exp(-alpha * fy[i] * fy[i]) * 4.0 * q / (d * d)
    return fo


@numba.njit(cache=True)
def _inv_denominator(base, phase, log_t):
    # 1 / (base + phase * t) for t = exp(log_t) >= 0, never forming a huge t.
    if log_t <= 0.0:
        return 1.0 / (base + phase * math.exp(log_t))
    u = math.exp(-log_t)
    return u / (base * u + phase)


@numba.njit(cache=True)
def _x_kernel(x, y, c1, c2, alpha):
    fx = x
    fy = y
    fo = np.empty(x.size, dtype=np.complex128)
    h = 0.5 * c1
    phase = complex(math.cos(c2), math.sin(c2))
    phase_conj = phase.conjugate()
    log2 = math.log(2.0)
    for i in range(fx.size):
        xi = fx[i]
        yi = fy[i]
        ay = h * abs(yi)
        g = math.exp(-alpha * (xi * xi + yi * yi))
        if ay == 0.0:
            fo[i] = g / (h * h)
            continue
        log_s = ay + math.log1p(-math.exp(-2.0 * ay)) - log2
        inv1 = _inv_denominator(h, -phase_conj, -h * xi + log_s)
        inv2 = _inv_denominator(h, phase, h * xi + log_s)
        fo[i] = g * inv1 * inv2
    return fo


def integrand_E(y, p: HarvestParams):
    """``exp(-alpha*y**2) * csch(c1*y/2 - i*c2)**2`` on the shifted contour."""
    y = np.asarray(y, dtype=float)
    return _e_kernel(np.ascontiguousarray(y).reshape(-1), p.c1, p.c2, p.alpha).reshape(y.shape)


def integrand_X(x, y, p: HarvestParams):
    """Shifted-contour integrand of X at real ``(x, y)`` with ``y >= 0``.

    ``exp(-alpha*(x**2 + y**2)) / (D1 * D2)`` where
    ``D1 = c1/2 - exp(-c1*x/2) * exp(-i*c2) * sinh(c1*y/2)`` and
    ``D2 = c1/2 + exp(c1*x/2) * exp(i*c2) * sinh(c1*y/2)``.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    flat = _x_kernel(np.ascontiguousarray(x).reshape(-1), np.ascontiguousarray(y).reshape(-1),
                     p.c1, p.c2, p.alpha)
    return flat.reshape(x.shape)


def e_prefactor(p: HarvestParams) -> float:
    """Constant multiplying the one-dimensional E integral."""
    return -(p.eta0**2) * p.c1 / (16.0 * math.pi**1.5) * (p.c2 / p.c3) * math.exp(-p.c3**2)


def x_prefactor(p: HarvestParams) -> float:
    """Constant multiplying the two-dimensional X integral."""
    return p.eta0**2 * p.c1**2 / (32.0 * math.pi**2) * math.exp(-p.c3**2)


def eval_E(p: HarvestParams, cfg: QuadConfig | None = None, radius: float | None = None) -> Evaluation:
    """Transition term E and its error estimate.

    The imaginary part of the integral vanishes by conjugate symmetry of the
    integrand; only the real part is returned. ``meta`` keeps the raw
    (unscaled) quadrature result, including its imaginary part.
    """
    R = p.radius if radius is None else radius
    res = integrate_1d(lambda y: integrand_E(y, p), Interval1D(-R, R), cfg)
    scale = e_prefactor(p)
    return Evaluation(scale * res.value.real, abs(scale) * res.err_est, res)


def eval_X(p: HarvestParams, cfg: QuadConfig | None = None, radius: float | None = None) -> Evaluation:
    """Entangling term X over ``[-R, R] x [0, R]`` and its error estimate."""
    R = p.radius if radius is None else radius
    res = integrate_2d(lambda x, y: integrand_X(x, y, p), Rect2D.from_bounds(-R, R, 0.0, R), cfg)
    scale = x_prefactor(p)
    return Evaluation(scale * res.value, scale * res.err_est, res)


def eval_E_sp(p: HarvestParams) -> float:
    """Stationary-phase E: ``eta0**2 exp(-c3**2) / (8 pi) (c2/c3)**2 csc(c2)**2``."""
    return p.eta0**2 * math.exp(-p.c3**2) / (8.0 * math.pi) * (p.c2 / p.c3) ** 2 / math.sin(p.c2) ** 2


def eval_X_sp(p: HarvestParams) -> float:
    """Stationary-phase X: ``eta0**2 exp(-c3**2) / (2 pi) (c2 / (c3 c1))**2``."""
    return p.eta0**2 * math.exp(-p.c3**2) / (2.0 * math.pi) * (p.c2 / (p.c3 * p.c1)) ** 2


def signed_negativity(E: float, X: complex) -> float:
    """``|X| - E`` without clamping; positive exactly when entangled."""
    return abs(X) - E


def negativity(E: float, X: complex) -> float:
    return max(abs(X) - E, 0.0)


def sp_entangled(c1: float, c2: float) -> bool:
    """Stationary-phase entanglement test ``4/c1**2 > csc(c2)**2``.

    Equivalent to ``c1 < 2 |sin c2|``; independent of c3.
    """
    _check_positive(c1=c1, c2=c2)
    return c1 < 2.0 * abs(math.sin(c2))


def evaluate(p: HarvestParams, cfg: QuadConfig | None = None) -> Observables:
    """E, X and the negativity at one parameter point."""
    E = eval_E(p, cfg)
    X = eval_X(p, cfg)
    return Observables(
        E=E.value,
        X=X.value,
        N=negativity(E.value, X.value),
        err_E=E.err,
        err_X=X.err,
        converged=E.meta.converged and X.meta.converged,
    )
