"""TVD and KLD between centered elliptical laws E(g1, I) and E(g2, D).

Every quantity reduces to one-dimensional radial integrals.  With t = |x|^2
the law of |X|^2 for X ~ E(g, I) has density

    pi^{n/2} / Gamma(n/2) * t^{n/2 - 1} * g(t),

and all integrals below are evaluated in u = ln t, where that density becomes
a smooth bump (heavy polynomial tails turn into exponential ones, and the
spike at n ~ 800 stays well resolved).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import specfun
from .core import BoundInterval, DivboundError, InternalCheckError
from .oracle import quad_adaptive
from .reduction import DiagonalScales

log = logging.getLogger(__name__)

LogGenerator = Callable[[float], float]

_U_MIN = -700.0
_U_MAX = 700.0
_LOG_DROP = 60.0  # integrand support: within e^-60 of the peak
_QUAD_TOL = 1e-12
_PROBES_PER_DECADE = 40
_MAX_BREAKPOINTS = 64
_SIGN_NOISE = 1e-12


class PathologicalGeneratorError(DivboundError):
    pass


@dataclass(frozen=True)
class DensityGenerator:
    """A density generator g for dimension n, given through ln g.

    ``radial_cdf``/``radial_sf``, when present, give the exact law of |X|^2
    and replace quadrature for masses of radial sets.
    """

    log_g: LogGenerator
    n: int
    monotone_decreasing: bool = False
    name: str = "custom"
    radial_cdf: Callable[[float], float] | None = field(default=None, compare=False)
    radial_sf: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")

    def log_radial_density_u(self, u: float) -> float:
        """ln of the density of ln|X|^2 at u."""
        n = self.n
        return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n) + 0.5 * n * u + self.log_g(math.exp(u))

    def validate(self, probes: int = 64, tol: float = 1e-6) -> None:
        """Check the monotonicity flag on a probe grid and the normalization."""
        if self.monotone_decreasing:
            ts = np.concatenate([[0.0], np.logspace(-6, 6, probes)])
            vals = [self.log_g(float(t)) for t in ts]
            for t1, v1, t2, v2 in zip(ts[:-1], vals[:-1], ts[1:], vals[1:]):
                if v2 > v1 + 1e-12 * max(1.0, abs(v1)):
                    raise ValueError(f"generator {self.name!r} increases between t={t1} and t={t2}")
        total = radial_measure(self).mass(0.0, math.inf, use_closed_form=False)
        if abs(total - 1.0) > tol:
            raise ValueError(f"generator {self.name!r} is not normalized for n={self.n}: total mass {total!r}")


def student_generator(nu: float, n: int) -> DensityGenerator:
    """Generator of the centered Student t law with nu degrees of freedom, scale I."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    const = math.lgamma(0.5 * (nu + n)) - math.lgamma(0.5 * nu) - 0.5 * n * math.log(nu * math.pi)
    power = 0.5 * (nu + n)

    def log_g(t: float) -> float:
        return const - power * math.log1p(t / nu)

    return DensityGenerator(log_g, n, monotone_decreasing=True, name=f"student:{nu:g}")


def normal_generator(n: int, variance: float = 1.0) -> DensityGenerator:
    """Generator of N(0, variance * I)."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    const = -0.5 * n * math.log(2.0 * math.pi * variance)

    def log_g(t: float) -> float:
        return const - t / (2.0 * variance)

    half_n = 0.5 * n
    return DensityGenerator(
        log_g,
        n,
        monotone_decreasing=True,
        name="normal" if variance == 1.0 else f"normal:{variance:g}",
        radial_cdf=lambda t: specfun.reg_lower_gamma(t / (2.0 * variance), half_n),
        radial_sf=lambda t: specfun.reg_upper_gamma(t / (2.0 * variance), half_n),
    )


def generator_from_preset(preset: str, n: int) -> DensityGenerator:
    """``"normal"``, ``"normal:<variance>"`` or ``"student:<nu>"``."""
    kind, _, arg = preset.partition(":")
    kind = kind.strip().lower()
    if kind == "normal":
        return normal_generator(n, float(arg) if arg else 1.0)
    if kind in ("student", "t"):
        if not arg:
            raise ValueError("student preset needs degrees of freedom, e.g. 'student:3'")
        return student_generator(float(arg), n)
    raise ValueError(f"unknown generator preset {preset!r}")


# ---------------------------------------------------------------------------
# Radial measure
# ---------------------------------------------------------------------------

def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int = 200) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a < 1e-10 * max(1.0, abs(a)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _safe(f: Callable[[float], float]) -> Callable[[float], float]:
    def g(u: float) -> float:
        try:
            v = f(u)
        except (OverflowError, ValueError):
            return -math.inf
        return v if not math.isnan(v) else -math.inf

    return g


def _find_mode(logf: Callable[[float], float], lo: float = -60.0, hi: float = _U_MAX) -> float:
    grid = np.linspace(lo, hi, 761)
    vals = np.array([logf(float(u)) for u in grid])
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    return _golden_max(logf, float(a), float(b))


def _support(logf: Callable[[float], float], mode: float, drop: float = _LOG_DROP) -> tuple[float, float]:
    peak = logf(mode)
    bounds = []
    for direction, limit in ((-1.0, _U_MIN), (1.0, _U_MAX)):
        step = 0.25
        u = mode
        while True:
            u_next = mode + direction * step
            if (direction < 0 and u_next <= limit) or (direction > 0 and u_next >= limit):
                u = limit
                break
            u = u_next
            if logf(u) < peak - drop:
                break
            step *= 2.0
        bounds.append(u)
    return bounds[0], bounds[1]


class RadialMeasure:
    """Law of |X|^2 for X ~ E(g, I), with masses of intervals."""

    def __init__(self, gen: DensityGenerator):
        self.gen = gen
        self._logf = _safe(gen.log_radial_density_u)
        self.mode = _find_mode(self._logf)
        self.u_lo, self.u_hi = _support(self._logf, self.mode)

    def _density_u(self, u: float) -> float:
        return math.exp(self._logf(u))

    def _quad_mass(self, t_lo: float, t_hi: float) -> float:
        u_lo = self.u_lo if t_lo <= 0 else max(self.u_lo, math.log(t_lo))
        u_hi = self.u_hi if math.isinf(t_hi) else min(self.u_hi, math.log(t_hi))
        if u_hi <= u_lo:
            return 0.0
        return quad_adaptive(self._density_u, u_lo, u_hi, tol=_QUAD_TOL, points=[self.mode], abs_tol=1e-15)

    def mass(self, t_lo: float, t_hi: float, use_closed_form: bool = True) -> float:
        """P{t_lo < |X|^2 < t_hi}."""
        if t_hi <= t_lo:
            return 0.0
        g = self.gen
        if use_closed_form and g.radial_cdf is not None:
            lo_cdf = 0.0 if t_lo <= 0 else g.radial_cdf(t_lo)
            if math.isinf(t_hi):
                return 1.0 - lo_cdf if g.radial_sf is None else (g.radial_sf(t_lo) if t_lo > 0 else 1.0)
            hi_cdf = g.radial_cdf(t_hi)
            if g.radial_sf is not None and lo_cdf > 0.5:
                return g.radial_sf(t_lo) - g.radial_sf(t_hi)
            return hi_cdf - lo_cdf
        return self._quad_mass(t_lo, t_hi)

    def region_mass(self, region: "RadialRegion", scale: float = 1.0, use_closed_form: bool = True) -> float:
        """P{scale * |X|^2 in region}."""
        return math.fsum(
            self.mass(lo / scale, hi / scale, use_closed_form) for lo, hi in region.intervals()
        )


_MEASURES: dict[int, RadialMeasure] = {}


def radial_measure(gen: DensityGenerator) -> RadialMeasure:
    # Measures hold no mutable state after construction, so sharing is safe.
    key = id(gen)
    m = _MEASURES.get(key)
    if m is None or m.gen is not gen:
        m = RadialMeasure(gen)
        if len(_MEASURES) > 256:
            _MEASURES.clear()
        _MEASURES[key] = m
    return m


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialRegion:
    """A finite union of intervals of [0, inf) given by its breakpoints.

    Membership alternates at each breakpoint, starting with ``kept_first`` on
    [0, breakpoints[0]).
    """

    breakpoints: tuple[float, ...]
    kept_first: bool

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if any(b <= a for a, b in zip(bp[:-1], bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if bp and bp[0] < 0:
            raise ValueError("breakpoints must be nonnegative")

    def intervals(self) -> list[tuple[float, float]]:
        edges = [0.0, *self.breakpoints, math.inf]
        kept = self.kept_first
        out = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if kept and hi > lo:
                out.append((lo, hi))
            kept = not kept
        return out

    def contains(self, t: float) -> bool:
        k = int(np.searchsorted(self.breakpoints, t, side="right"))
        return self.kept_first == (k % 2 == 0)

    @property
    def is_full(self) -> bool:
        return not self.breakpoints and self.kept_first


def region_from_sign(
    h: Callable[[float], float],
    scan_range: tuple[float, float] = (1e-8, 1e8),
    probes: int = 512,
    acc: specfun.Accuracy = specfun.DEFAULT_ACCURACY,
) -> RadialRegion:
    """The set {t >= 0 : h(t) >= 0}, located by a log-spaced sign scan and Brent refinement."""
    lo, hi = scan_range
    decades = math.log10(hi) - math.log10(lo)
    count = max(probes, int(math.ceil(_PROBES_PER_DECADE * decades)))
    ts = np.concatenate([[0.0], np.logspace(math.log10(lo), math.log10(hi), count)])
    vals = [h(float(t)) for t in ts]
    # probes where h is zero to rounding carry no sign; crossings are bracketed by resolved probes
    resolved = [i for i, v in enumerate(vals) if abs(v) > _SIGN_NOISE]
    if not resolved:
        return RadialRegion((), True)
    breaks = []
    for i, j in zip(resolved[:-1], resolved[1:]):
        if (vals[i] >= 0) != (vals[j] >= 0):
            a, b = float(ts[i]), float(ts[j])
            if a == 0.0:
                root = optimize.brentq(h, a, b, xtol=1e-300, rtol=1e-15, maxiter=500)
            else:
                root = math.exp(
                    optimize.brentq(lambda u: h(math.exp(u)), math.log(a), math.log(b), xtol=1e-14,
                                    rtol=1e-15, maxiter=500)
                )
            breaks.append(root)
            if len(breaks) > _MAX_BREAKPOINTS:
                raise PathologicalGeneratorError(f"more than {_MAX_BREAKPOINTS} sign changes found")
    dedup: list[float] = []
    for b in breaks:
        if not dedup or b > dedup[-1]:
            dedup.append(b)
    return RadialRegion(tuple(dedup), vals[resolved[0]] >= 0)


def _scan_range(*gens: DensityGenerator, scale: float = 1.0) -> tuple[float, float]:
    lo, hi = 1e-8, 1e8
    for g in gens:
        m = radial_measure(g)
        lo = min(lo, math.exp(m.u_lo) / max(scale, 1.0))
        hi = max(hi, math.exp(m.u_hi) * max(scale, 1.0))
    return max(lo, 1e-300), min(hi, 1e300)


def region_A(g1: DensityGenerator, g2: DensityGenerator) -> RadialRegion:
    """{t : g1(t) >= g2(t)}."""
    _same_dim(g1, g2)
    return region_from_sign(lambda t: g1.log_g(t) - g2.log_g(t), _scan_range(g1, g2))


def region_A_pm(g1: DensityGenerator, g2: DensityGenerator, d: DiagonalScales) -> tuple[RadialRegion, RadialRegion]:
    """(A_minus, A_plus) with A_pm = {t : sqrt(prod d) g1(t) >= g2(t / d_mp)}."""
    _same_dim(g1, g2)
    half = 0.5 * d.sum_log_d
    rng = _scan_range(g1, g2, scale=d.d_plus / d.d_minus)
    a_minus = region_from_sign(lambda t: half + g1.log_g(t) - g2.log_g(t / d.d_plus), rng)
    a_plus = region_from_sign(lambda t: half + g1.log_g(t) - g2.log_g(t / d.d_minus), rng)
    return a_minus, a_plus


def _same_dim(g1: DensityGenerator, g2: DensityGenerator) -> None:
    if g1.n != g2.n:
        raise ValueError(f"generators have different dimensions: {g1.n} vs {g2.n}")


# ---------------------------------------------------------------------------
# TVD
# ---------------------------------------------------------------------------

def tv_exact_equal_scales(g1: DensityGenerator, g2: DensityGenerator, n: int | None = None) -> float:
    """TVD(E(g1, I), E(g2, I)) as the g1-minus-g2 radial mass of {g1 >= g2}."""
    _check_n(g1, g2, n)
    region = region_A(g1, g2)
    m1, m2 = radial_measure(g1), radial_measure(g2)
    value = m1.region_mass(region) - m2.region_mass(region)
    return min(1.0, max(0.0, value))


def tv_bounds(
    g1: DensityGenerator, g2: DensityGenerator, d: DiagonalScales, n: int | None = None
) -> BoundInterval:
    """Two-sided TVD bounds for decreasing generators and D = diag(d)."""
    _check_n(g1, g2, n)
    if d.n != g1.n:
        raise ValueError(f"scale vector has length {d.n}, expected {g1.n}")
    if not (g1.monotone_decreasing and g2.monotone_decreasing):
        raise ValueError("tv_bounds requires both generators to be flagged monotone_decreasing")
    a_minus, a_plus = region_A_pm(g1, g2, d)
    m1, m2 = radial_measure(g1), radial_measure(g2)
    lower = m1.region_mass(a_minus) - m2.region_mass(a_plus, scale=d.d_minus)
    upper = m1.region_mass(a_plus) - m2.region_mass(a_minus, scale=d.d_plus)
    return _tv_interval(lower, upper, {"A_minus": a_minus.breakpoints, "A_plus": a_plus.breakpoints})


def _tv_interval(lower: float, upper: float, meta: dict) -> BoundInterval:
    meta = dict(meta)
    if lower > upper:
        if lower - upper > 1e-9:
            raise InternalCheckError(f"TVD lower bound {lower!r} exceeds upper bound {upper!r}")
        meta["order_repaired"] = lower - upper
        lower, upper = upper, lower
    lo = min(1.0, max(0.0, lower))
    hi = min(1.0, max(0.0, upper))
    meta["raw"] = (lower, upper)
    return BoundInterval(lo, hi, clipped=(lo != lower or hi != upper), metadata=meta)


# ---------------------------------------------------------------------------
# KLD
# ---------------------------------------------------------------------------

def _expectation_under(
    g1: DensityGenerator, fn: Callable[[float], float], what: str
) -> float:
    """int ln-density-weighted fn(t) over the radial law of g1; +inf when the tail diverges."""
    m = radial_measure(g1)
    logf = m._logf

    def integrand(u: float) -> float:
        ld = logf(u)
        if ld == -math.inf:
            return 0.0
        return math.exp(ld) * fn(math.exp(u))

    def log_abs(u: float) -> float:
        v = fn(math.exp(u))
        if v == 0.0:
            return -math.inf
        return logf(u) + math.log(abs(v))

    # the weight fn can stretch the support of the bare radial density
    peak_u = _find_mode(_safe(log_abs), -60.0, _U_MAX)
    peak = max(log_abs(peak_u), log_abs(m.mode))
    u_lo = m.u_lo
    step = 0.25
    u_hi = max(m.u_hi, peak_u)
    while u_hi < _U_MAX and log_abs(u_hi) > peak - _LOG_DROP:
        u_hi = min(_U_MAX, u_hi + step)
        step *= 2.0
    tail = 0.0
    if log_abs(u_hi) > peak - _LOG_DROP:
        # integrand still alive at the end of the representable range
        slope = (log_abs(u_hi) - log_abs(u_hi - 50.0)) / 50.0
        if slope >= -1e-12:
            log.info("%s diverges: integrand log-slope %.3g at u=%.0f", what, slope, u_hi)
            return math.copysign(math.inf, fn(math.exp(u_hi)))
        tail = integrand(u_hi) / (-slope)
    pts = [p for p in (m.mode, peak_u) if u_lo < p < u_hi]
    body = quad_adaptive(integrand, u_lo, u_hi, tol=1e-11, points=pts, abs_tol=1e-14)
    return body + tail


def kl_exact_equal_scales(g1: DensityGenerator, g2: DensityGenerator, n: int | None = None) -> float:
    """KLD(E(g1, I) || E(g2, I)); +inf when the integral diverges."""
    _check_n(g1, g2, n)
    return _expectation_under(g1, lambda t: g1.log_g(t) - g2.log_g(t), "KL integral")


def kl_bounds(
    g1: DensityGenerator, g2: DensityGenerator, d: DiagonalScales, n: int | None = None
) -> BoundInterval:
    """KLD(E(g1, I) || E(g2, D)) sandwich for decreasing g2.

    No clipping at zero: the lower side may be negative.
    """
    _check_n(g1, g2, n)
    if not g2.monotone_decreasing:
        raise ValueError("kl_bounds requires g2 to be flagged monotone_decreasing")
    half = 0.5 * d.sum_log_d
    lo = _expectation_under(g1, lambda t: g1.log_g(t) - g2.log_g(t / d.d_plus), "KL lower integral") + half
    hi = _expectation_under(g1, lambda t: g1.log_g(t) - g2.log_g(t / d.d_minus), "KL upper integral") + half
    meta = {}
    if lo > hi:
        if lo - hi > 1e-9 * max(1.0, abs(hi)):
            raise InternalCheckError(f"KL lower bound {lo!r} exceeds upper bound {hi!r}")
        meta["order_repaired"] = lo - hi
        lo, hi = hi, lo
    return BoundInterval(lo, hi, metadata=meta)


def _check_n(g1: DensityGenerator, g2: DensityGenerator, n: int | None) -> None:
    _same_dim(g1, g2)
    if n is not None and n != g1.n:
        raise ValueError(f"generators are built for n={g1.n}, got n={n}")
