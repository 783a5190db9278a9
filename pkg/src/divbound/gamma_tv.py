"""TVD between two products of independent Gamma laws.

For X with independent Gamma(alpha_i, lambda_i) coordinates and Y with
Gamma(beta_i, mu_i) ones, the first density dominates exactly where

    sum_i Z_i(x_i) >= c,   Z_i(x) = (alpha_i - beta_i) ln x + (mu_i - lambda_i) x.

So TVD = P{sum Z_i(Y_i) < c} - P{sum Z_i(X_i) < c}.  Each probability is
replaced by its normal approximation, and the Berry-Esseen inequality for
non-identically distributed summands bounds the error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize

from . import specfun
from .oracle import quad_adaptive

DEFAULT_C0 = 0.56
_RHO_TOL = 1e-10
_LOG_DROP = 80.0


@dataclass(frozen=True)
class GammaProductSpec:
    """Shapes (alpha, beta) and rates (lam, mu) of the two product laws."""

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    lam: tuple[float, ...]
    mu: tuple[float, ...]

    def __post_init__(self) -> None:
        vecs = {}
        for name in ("alpha", "beta", "lam", "mu"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.ndim != 1:
                raise ValueError(f"{name} must be a vector")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} entries must be finite and positive")
            vecs[name] = tuple(float(v) for v in arr)
        sizes = {len(v) for v in vecs.values()}
        if len(sizes) != 1:
            raise ValueError("alpha, beta, lam and mu must have equal lengths")
        for name, v in vecs.items():
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return len(self.alpha)

    def swapped(self) -> "GammaProductSpec":
        return GammaProductSpec(self.beta, self.alpha, self.mu, self.lam)

    @property
    def identical(self) -> bool:
        return self.alpha == self.beta and self.lam == self.mu

    @classmethod
    def iid(cls, n: int, alpha: float, beta: float, lam: float, mu: float) -> "GammaProductSpec":
        return cls((alpha,) * n, (beta,) * n, (lam,) * n, (mu,) * n)


@dataclass(frozen=True)
class MomentSummary:
    mean_z: tuple[float, ...]
    var_z: tuple[float, ...]
    rho: tuple[float, ...]
    mean_zt: tuple[float, ...]
    var_zt: tuple[float, ...]
    rho_t: tuple[float, ...]
    kappa: float
    kappa_t: float
    log_c_threshold: float


@dataclass(frozen=True)
class GammaTvEstimate:
    point: float
    eps_bound: float
    interval: tuple[float, float]
    c0_used: float
    flags: tuple[str, ...] = field(default=())

    @property
    def lower(self) -> float:
        return self.interval[0]

    @property
    def upper(self) -> float:
        return self.interval[1]


def threshold_c(spec: GammaProductSpec) -> float:
    """c = sum_i [ln Gamma(alpha_i) + beta_i ln mu_i - ln Gamma(beta_i) - alpha_i ln lambda_i]."""
    return math.fsum(
        math.lgamma(a) + b * math.log(m) - math.lgamma(b) - a * math.log(l)
        for a, b, l, m in zip(spec.alpha, spec.beta, spec.lam, spec.mu)
    )


def z_moments(k: float, s: float, shape: float, rate: float) -> tuple[float, float]:
    """Mean and variance of k ln X + s X for X ~ Gamma(shape, rate)."""
    mean = k * (specfun.digamma(shape) - math.log(rate)) + s * shape / rate
    var = k * k * specfun.trigamma(shape) + s * s * shape / (rate * rate) + 2.0 * k * s / rate
    return mean, max(var, 0.0)


def third_abs_central_moment(k: float, s: float, shape: float, rate: float, mean: float | None = None) -> float:
    """E|Z - EZ|^3 for Z = k ln X + s X, X ~ Gamma(shape, rate), by quadrature in u = ln X.

    The range is split at the density mode, at the turning point of Z and at
    each solution of Z = EZ, so every piece integrates a smooth function.
    """
    if k == 0.0 and s == 0.0:
        return 0.0
    if mean is None:
        mean = z_moments(k, s, shape, rate)[0]
    log_norm = shape * math.log(rate) - math.lgamma(shape)

    def z_minus_mean(u: float) -> float:
        return k * u + s * math.exp(u) - mean

    def log_density(u: float) -> float:
        return log_norm + shape * u - rate * math.exp(u)

    def integrand(u: float) -> float:
        return abs(z_minus_mean(u)) ** 3 * math.exp(log_density(u))

    mode = math.log(shape / rate)
    peak = log_density(mode)
    lo = _walk(log_density, mode, -1.0, peak - _LOG_DROP)
    hi = _walk(log_density, mode, 1.0, peak - _LOG_DROP)

    cuts = [mode]
    pieces = [(lo, hi)]
    if k != 0.0 and s != 0.0 and -k / s > 0:
        turn = math.log(-k / s)
        if lo < turn < hi:
            cuts.append(turn)
            pieces = [(lo, turn), (turn, hi)]
    for a, b in pieces:
        fa, fb = z_minus_mean(a), z_minus_mean(b)
        if fa == 0.0 or fb == 0.0 or (fa < 0) != (fb < 0):
            if fa != 0.0 and fb != 0.0:
                cuts.append(optimize.brentq(z_minus_mean, a, b, xtol=1e-14, rtol=1e-15))
    return quad_adaptive(integrand, lo, hi, tol=_RHO_TOL, points=cuts, abs_tol=1e-300)


def _walk(f, start: float, direction: float, level: float) -> float:
    step = 0.5
    u = start
    for _ in range(200):
        u = start + direction * step
        if f(u) < level:
            return u
        step *= 1.5
    return u


@lru_cache(maxsize=4096)
def _rho_cached(k: float, s: float, shape: float, rate: float, mean: float) -> float:
    # iid products repeat the same component many times
    return third_abs_central_moment(k, s, shape, rate, mean)


def moments(spec: GammaProductSpec) -> MomentSummary:
    mean_z, var_z, rho = [], [], []
    mean_zt, var_zt, rho_t = [], [], []
    for a, b, l, m in zip(spec.alpha, spec.beta, spec.lam, spec.mu):
        k, s = a - b, m - l
        mz, vz = z_moments(k, s, a, l)
        mt, vt = z_moments(k, s, b, m)
        mean_z.append(mz)
        var_z.append(vz)
        mean_zt.append(mt)
        var_zt.append(vt)
        rho.append(_rho_cached(k, s, a, l, mz))
        rho_t.append(_rho_cached(k, s, b, m, mt))
    return MomentSummary(
        mean_z=tuple(mean_z),
        var_z=tuple(var_z),
        rho=tuple(rho),
        mean_zt=tuple(mean_zt),
        var_zt=tuple(var_zt),
        rho_t=tuple(rho_t),
        kappa=_kappa(rho, var_z),
        kappa_t=_kappa(rho_t, var_zt),
        log_c_threshold=threshold_c(spec),
    )


def _kappa(rho: Sequence[float], var: Sequence[float]) -> float:
    v = math.fsum(var)
    return math.fsum(rho) / v**1.5 if v > 0 else 0.0


def tv_estimate(spec: GammaProductSpec, c0: float = DEFAULT_C0) -> GammaTvEstimate:
    """Normal approximation of the TVD with its Berry-Esseen error interval."""
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    if spec.identical:
        return GammaTvEstimate(0.0, 0.0, (0.0, 0.0), c0, ("identical_laws",))
    mom = moments(spec)
    c = mom.log_c_threshold
    sd = math.sqrt(math.fsum(mom.var_z))
    sd_t = math.sqrt(math.fsum(mom.var_zt))
    lower_arg = (c - math.fsum(mom.mean_z)) / sd
    upper_arg = (c - math.fsum(mom.mean_zt)) / sd_t
    flags = []
    if lower_arg > upper_arg:
        point = 0.0
        flags.append("inverted_limits")
    else:
        point = _normal_prob_between(lower_arg, upper_arg)
    point = min(1.0, max(0.0, point))
    eps = c0 * (mom.kappa + mom.kappa_t)
    return GammaTvEstimate(point, eps, (max(0.0, point - eps), min(1.0, point + eps)), c0, tuple(flags))


def _normal_prob_between(lo: float, hi: float) -> float:
    # use whichever tail keeps both terms small
    if lo >= 0:
        return specfun.normal_cdf(-lo) - specfun.normal_cdf(-hi)
    return specfun.normal_cdf(hi) - specfun.normal_cdf(lo)


def tv_exact_1d(alpha: float, beta: float, lam: float, mu: float) -> float:
    """(1/2) int |f1 - f2| for Gamma(alpha, lam) against Gamma(beta, mu), by quadrature.

    The integrand is taken in u = ln x and split where the log-density
    ratio changes sign.
    """
    for v in (alpha, beta, lam, mu):
        if not v > 0:
            raise ValueError("shapes and rates must be positive")
    if alpha == beta and lam == mu:
        return 0.0
    c1 = alpha * math.log(lam) - math.lgamma(alpha)
    c2 = beta * math.log(mu) - math.lgamma(beta)

    def ld1(u: float) -> float:
        return c1 + alpha * u - lam * math.exp(u)

    def ld2(u: float) -> float:
        return c2 + beta * u - mu * math.exp(u)

    def ratio(u: float) -> float:
        return ld1(u) - ld2(u)

    def integrand(u: float) -> float:
        return abs(math.exp(ld1(u)) - math.exp(ld2(u)))

    m1, m2 = math.log(alpha / lam), math.log(beta / mu)
    lo = min(_walk(ld1, m1, -1.0, ld1(m1) - _LOG_DROP), _walk(ld2, m2, -1.0, ld2(m2) - _LOG_DROP))
    hi = max(_walk(ld1, m1, 1.0, ld1(m1) - _LOG_DROP), _walk(ld2, m2, 1.0, ld2(m2) - _LOG_DROP))
    cuts = [m1, m2]
    # ratio(u) = (alpha - beta) u + (mu - lam) e^u + const is monotone on each side of its turning point
    edges = [lo, hi]
    if alpha != beta and lam != mu and (alpha - beta) / (lam - mu) > 0:
        turn = math.log((alpha - beta) / (lam - mu))
        if lo < turn < hi:
            edges = [lo, turn, hi]
            cuts.append(turn)
    for a, b in zip(edges[:-1], edges[1:]):
        fa, fb = ratio(a), ratio(b)
        if fa != 0.0 and fb != 0.0 and (fa < 0) != (fb < 0):
            cuts.append(optimize.brentq(ratio, a, b, xtol=1e-14, rtol=1e-15))
    val = quad_adaptive(integrand, lo, hi, tol=1e-11, points=cuts, abs_tol=1e-14)
    return min(1.0, max(0.0, 0.5 * val))
