"""Closed-form TVD and KLD bounds between t_nu(0, I) and N(0, diag(d)).

With x = |X|^2 / nu, alpha = (nu + n) / 2 and gamma = nu / (2 d), the set
where the Student density dominates the scaled normal one is the sublevel set
{x : phi(x) <= c} of phi(x) = (1 + x)^alpha e^{-gamma x}.  Its complement is
an interval whose endpoints come from the two real branches of Lambert W, and
the masses of that interval under both laws are incomplete gamma and beta
functions.  All c-related quantities are handled in log space, since c leaves
the double range for n in the hundreds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

from . import specfun
from .core import BoundInterval, InternalCheckError, PreconditionError
from .oracle import quad_adaptive
from .reduction import DiagonalScales

MAX_DIMENSION = 5000
N_TOO_SMALL = "PRECONDITION_N_TOO_SMALL"
DIMENSION_TOO_LARGE = "PRECONDITION_DIMENSION_TOO_LARGE"

_TANGENCY_TOL = 1e-13
_ROOT_CHECK_TOL = 1e-9
_N0_MAX_K = 10_000_000
# closed-form base case loses ~e^x sqrt(x) ulps to cancellation
_DELTA1_CLOSED_FORM_MAX_X = 6.0

BETA_ARGUMENT = "1/(1+x)"


class SublevelCase(str, enum.Enum):
    FULL_RAY = "FULL_RAY"
    HALF_RAY = "HALF_RAY"
    TWO_INTERVALS = "TWO_INTERVALS"


@dataclass(frozen=True)
class StudentNormalProblem:
    """t_nu(0, I) against N(0, diag(d)) in dimension n = len(d)."""

    nu: float
    d: DiagonalScales
    n: int = field(init=False)
    alpha: float = field(init=False)
    gamma_minus: float = field(init=False)
    gamma_plus: float = field(init=False)
    log_c: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be positive and finite, got {self.nu!r}")
        n = self.d.n
        if n > MAX_DIMENSION:
            raise PreconditionError(
                DIMENSION_TOO_LARGE, f"n={n} exceeds the supported maximum {MAX_DIMENSION}"
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "alpha", 0.5 * (self.nu + n))
        object.__setattr__(self, "gamma_minus", self.nu / (2.0 * self.d.d_plus))
        object.__setattr__(self, "gamma_plus", self.nu / (2.0 * self.d.d_minus))
        object.__setattr__(self, "log_c", log_c(self.nu, n, self.d))

    @classmethod
    def from_values(cls, nu: float, d) -> "StudentNormalProblem":
        return cls(float(nu), d if isinstance(d, DiagonalScales) else DiagonalScales.from_values(d))


@dataclass(frozen=True)
class SublevelSolution:
    """Complement of {x >= 0 : phi(x) <= c}.

    FULL_RAY: the sublevel set is all of [0, inf) (no endpoints).
    HALF_RAY: the complement is [0, b).
    TWO_INTERVALS: the complement is (a, b); a == b flags a tangency, where
    the complement has measure zero.
    """

    case: SublevelCase
    a: float | None = None
    b: float | None = None

    def __post_init__(self) -> None:
        if self.case is SublevelCase.TWO_INTERVALS:
            if self.a is None or self.b is None or not 0 <= self.a <= self.b:
                raise InternalCheckError(f"bad two-interval endpoints a={self.a!r}, b={self.b!r}")
        elif self.case is SublevelCase.HALF_RAY:
            if self.b is None or self.b <= 0 or self.a is not None:
                raise InternalCheckError(f"bad half-ray endpoint b={self.b!r}")

    def complement(self) -> tuple[float, float] | None:
        """The interval where phi exceeds c, or None."""
        if self.case is SublevelCase.FULL_RAY:
            return None
        if self.case is SublevelCase.HALF_RAY:
            return 0.0, self.b
        return self.a, self.b


@dataclass(frozen=True)
class RegimeReport:
    n0: int
    condition_liminf: bool
    condition_limsup: bool
    applicable: bool
    log_threshold_plus: float
    log_threshold_minus: float

    @property
    def name(self) -> str:
        return "liminf" if self.condition_liminf else "limsup"


# ---------------------------------------------------------------------------
# Thresholds
# ---------------------------------------------------------------------------

def log_c(nu: float, n: int, d: DiagonalScales) -> float:
    """ln c = ln Gamma((nu+n)/2) - ln Gamma(nu/2) + (n/2) ln(2/nu) + (1/2) sum ln d."""
    _check_nu_n(nu, n)
    if d.n != n:
        raise ValueError(f"scale vector has length {d.n}, expected {n}")
    return (
        math.lgamma(0.5 * (nu + n)) - math.lgamma(0.5 * nu) + 0.5 * n * math.log(2.0 / nu) + 0.5 * d.sum_log_d
    )


def clow(nu: float, n: int, d_minus: float) -> float:
    """ln of the lower envelope of c that uses only d_minus."""
    _check_nu_n(nu, n)
    if d_minus <= 0:
        raise ValueError("d_minus must be positive")
    if n % 2 == 0:
        k = n // 2
        return math.fsum(math.log1p(2.0 * l / nu) for l in range(k)) + k * math.log(d_minus)
    return math.lgamma(0.5 * (nu + n)) - math.lgamma(0.5 * nu) + 0.5 * n * math.log(2.0 * d_minus / nu)


def compute_n0(nu: float, d_minus: float) -> int:
    """Smallest even n0 = 2k with (1/k) sum_{l<k} ln(1 + 2l/nu) >= -ln d_minus."""
    if nu <= 0 or d_minus <= 0:
        raise ValueError("nu and d_minus must be positive")
    target = -math.log(d_minus)
    total = 0.0
    for k in range(1, _N0_MAX_K + 1):
        # total = sum_{l<k} ln(1 + 2l/nu)
        if total >= target * k:
            return 2 * k
        total += math.log1p(2.0 * k / nu)
    raise PreconditionError("PRECONDITION_N0_NOT_FOUND", f"no n0 with k <= {_N0_MAX_K} for nu={nu}, d_minus={d_minus}")


def log_phi_max(alpha: float, gamma: float) -> float:
    """ln max_{x>=0} (1+x)^alpha e^{-gamma x}."""
    if gamma >= alpha:
        return 0.0
    return gamma + alpha * math.log(alpha / gamma) - alpha


def _log_threshold(alpha: float, gamma: float) -> float:
    # the expression used by the regime conditions, valid for any gamma
    return gamma + alpha * math.log(alpha / gamma) - alpha


def classify_regime(problem: StudentNormalProblem) -> RegimeReport:
    a = problem.alpha
    thr_plus = _log_threshold(a, problem.gamma_plus)
    thr_minus = _log_threshold(a, problem.gamma_minus)
    slack = 1e-12 * max(1.0, abs(thr_minus))
    if not problem.log_c < thr_minus + slack:
        raise InternalCheckError(
            f"ln c = {problem.log_c!r} is not below the gamma_minus threshold {thr_minus!r}"
        )
    liminf = problem.log_c < thr_plus
    n0 = compute_n0(problem.nu, problem.d.d_minus)
    return RegimeReport(
        n0=n0,
        condition_liminf=liminf,
        condition_limsup=not liminf,
        applicable=problem.n >= n0,
        log_threshold_plus=thr_plus,
        log_threshold_minus=thr_minus,
    )


# ---------------------------------------------------------------------------
# Sublevel sets
# ---------------------------------------------------------------------------

def _log_phi(alpha: float, gamma: float, x: float) -> float:
    return alpha * math.log1p(x) - gamma * x


def _polish(alpha: float, gamma: float, lc: float, x: float) -> float:
    # Newton on alpha ln(1+x) - gamma x - ln c; skipped where the slope vanishes
    for _ in range(3):
        slope = alpha / (1.0 + x) - gamma
        if abs(slope) < 1e-8 * (alpha / (1.0 + x)):
            break
        step = (_log_phi(alpha, gamma, x) - lc) / slope
        x_new = x - step
        if x_new < 0 or not math.isfinite(x_new):
            break
        x = x_new
        if abs(step) <= 4 * 2.2e-16 * max(x, 1.0):
            break
    return x


def _check_root(alpha: float, gamma: float, lc: float, x: float) -> None:
    err = abs(_log_phi(alpha, gamma, x) - lc)
    if err > _ROOT_CHECK_TOL * max(1.0, abs(lc)):
        raise InternalCheckError(f"endpoint {x!r} misses phi = c by {err:.3g} in log scale")


def sublevel_endpoints(alpha: float, gamma: float, log_c: float) -> SublevelSolution:
    """Endpoints of {x >= 0 : (1+x)^alpha e^{-gamma x} <= e^{log_c}}."""
    if not (alpha > 0 and gamma > 0):
        raise ValueError("alpha and gamma must be positive")
    lc = log_c
    if lc >= log_phi_max(alpha, gamma):
        return SublevelSolution(SublevelCase.FULL_RAY)
    # (1+x) e^{-(gamma/alpha)(1+x)} = c^{1/alpha} e^{-gamma/alpha}  =>  W(z) with
    log_mz = math.log(gamma / alpha) + lc / alpha - gamma / alpha
    z = -math.exp(log_mz)
    gap = z + specfun.CONSTANTS.inv_e
    if gap < -_TANGENCY_TOL:
        raise InternalCheckError(f"Lambert argument {z!r} below -1/e; regime classification is inconsistent")
    r = alpha / gamma
    if gap <= _TANGENCY_TOL:
        x0 = (alpha - gamma) / gamma
        return SublevelSolution(SublevelCase.TWO_INTERVALS, x0, x0)
    z = max(z, -specfun.CONSTANTS.inv_e)
    b = _polish(alpha, gamma, lc, -1.0 - r * specfun.lambert_wm1(z))
    _check_root(alpha, gamma, lc, b)
    if lc < 0:
        return SublevelSolution(SublevelCase.HALF_RAY, None, b)
    a = -1.0 - r * specfun.lambert_w0(z)
    a = max(0.0, _polish(alpha, gamma, lc, max(a, 0.0)))
    _check_root(alpha, gamma, lc, a)
    return SublevelSolution(SublevelCase.TWO_INTERVALS, a, b)


# ---------------------------------------------------------------------------
# Interval masses
# ---------------------------------------------------------------------------

def student_tail(x: float, nu: float, n: int) -> float:
    """P{|X|^2 / nu >= x} = I(1/(1+x); nu/2, n/2) for X ~ t_nu(0, I_n)."""
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return specfun.reg_inc_beta(1.0 / (1.0 + x), 0.5 * nu, 0.5 * n)


def _student_cdf(x: float, nu: float, n: int) -> float:
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return specfun.reg_inc_beta(x / (1.0 + x), 0.5 * n, 0.5 * nu)


def student_interval_mass(lo: float, hi: float, nu: float, n: int) -> float:
    """P{lo < |X|^2 / nu < hi} for the Student law."""
    if hi <= lo:
        return 0.0
    if _student_cdf(hi, nu, n) <= 0.5:
        return _student_cdf(hi, nu, n) - _student_cdf(lo, nu, n)
    return student_tail(lo, nu, n) - student_tail(hi, nu, n)


def normal_interval_mass(lo: float, hi: float, nu: float, n: int, scale: float) -> float:
    """P{lo < scale |Z|^2 / nu < hi} for Z ~ N(0, I_n)."""
    if hi <= lo:
        return 0.0
    k = nu / (2.0 * scale)
    p_hi = specfun.reg_lower_gamma(k * hi, 0.5 * n)
    if p_hi <= 0.5:
        return p_hi - (specfun.reg_lower_gamma(k * lo, 0.5 * n) if lo > 0 else 0.0)
    q_lo = specfun.reg_upper_gamma(k * lo, 0.5 * n) if lo > 0 else 1.0
    return q_lo - specfun.reg_upper_gamma(k * hi, 0.5 * n)


def _normal_mass(sol: SublevelSolution, problem: StudentNormalProblem, scale: float) -> float:
    iv = sol.complement()
    return 0.0 if iv is None else normal_interval_mass(iv[0], iv[1], problem.nu, problem.n, scale)


def _student_mass(sol: SublevelSolution, problem: StudentNormalProblem) -> float:
    iv = sol.complement()
    return 0.0 if iv is None else student_interval_mass(iv[0], iv[1], problem.nu, problem.n)


# ---------------------------------------------------------------------------
# TVD
# ---------------------------------------------------------------------------

def tv_bounds_student_normal(problem: StudentNormalProblem) -> BoundInterval:
    """Certified interval for TVD(t_nu(0, I), N(0, diag(d))).

    upper = P_{N,d+}(complement of A-) - P_t(complement of A+)
    lower = P_{N,d-}(complement of A+) - P_t(complement of A-)
    where A-/A+ use gamma_minus/gamma_plus.  When A+ is the whole ray
    (limsup side) the lower bound is trivial and clips to 0.
    """
    report = classify_regime(problem)
    if not report.applicable:
        raise PreconditionError(N_TOO_SMALL, f"n={problem.n} is below n0={report.n0}")
    sol_minus = sublevel_endpoints(problem.alpha, problem.gamma_minus, problem.log_c)
    sol_plus = sublevel_endpoints(problem.alpha, problem.gamma_plus, problem.log_c)
    upper = _normal_mass(sol_minus, problem, problem.d.d_plus) - _student_mass(sol_plus, problem)
    lower = _normal_mass(sol_plus, problem, problem.d.d_minus) - _student_mass(sol_minus, problem)
    meta = {
        "n0": report.n0,
        "beta_argument": BETA_ARGUMENT,
        "A_minus": sol_minus,
        "A_plus": sol_plus,
        "raw": (lower, upper),
    }
    if lower > upper:
        if lower - upper > 1e-10:
            raise InternalCheckError(f"TVD lower bound {lower!r} exceeds upper bound {upper!r}")
        # equal-scale collapse: both sides are the same number up to rounding
        meta["order_repaired"] = lower - upper
        lower, upper = upper, lower
    lo = min(1.0, max(0.0, lower))
    hi = min(1.0, max(0.0, upper))
    return BoundInterval(lo, hi, regime=report.name, clipped=(lo != lower or hi != upper), metadata=meta)


BETA_VARIANTS = ("1/(1+x)", "1/(1+nu*x)", "1/(1+nu*x^2)")


def beta_variant_check(problem: StudentNormalProblem, which: str = "minus") -> dict[str, float]:
    """Compare candidate incomplete-beta forms of the Student mass of (a, b)
    with direct radial quadrature; returns the absolute error per variant.
    """
    gamma = problem.gamma_minus if which == "minus" else problem.gamma_plus
    sol = sublevel_endpoints(problem.alpha, gamma, problem.log_c)
    iv = sol.complement()
    if iv is None:
        raise ValueError("the complement is empty; nothing to compare")
    a, b = iv
    nu, n = problem.nu, problem.n
    const = (
        math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n)
        + math.lgamma(0.5 * (nu + n)) - math.lgamma(0.5 * nu) - 0.5 * n * math.log(nu * math.pi)
    )

    def radial(r: float) -> float:
        return math.exp(const + (n - 1) * math.log(r) - 0.5 * (nu + n) * math.log1p(r * r / nu))

    r_lo, r_hi = math.sqrt(nu * a), math.sqrt(nu * b)
    mode = math.sqrt(max(nu * (n - 1) / (nu + 1), 0.0))
    truth = quad_adaptive(radial, r_lo, r_hi, tol=1e-12, points=[mode], abs_tol=1e-15)
    beta = lambda arg: specfun.reg_inc_beta(arg, 0.5 * nu, 0.5 * n)  # noqa: E731
    candidates = {
        "1/(1+x)": beta(1 / (1 + a)) - beta(1 / (1 + b)),
        "1/(1+nu*x)": beta(1 / (1 + nu * a)) - beta(1 / (1 + nu * b)),
        "1/(1+nu*x^2)": beta(1 / (1 + nu * a * a)) - beta(1 / (1 + nu * b * b)),
    }
    return {k: abs(v - truth) for k, v in candidates.items()}


# ---------------------------------------------------------------------------
# KLD
# ---------------------------------------------------------------------------

def _log_student_const(nu: float, n: int) -> float:
    return math.lgamma(0.5 * (nu + n)) - math.lgamma(0.5 * nu) - 0.5 * n * math.log(math.pi * nu)


def kl_exact_t_vs_normal(problem: StudentNormalProblem) -> float:
    """KLD(t_nu(0, I) || N(0, diag(d))); +inf when nu <= 2."""
    nu, n, d = problem.nu, problem.n, problem.d
    if nu <= 2:
        return math.inf
    a = 0.5 * (nu + n)
    inv_sum = math.fsum(0.5 / v for v in d.d)
    return math.fsum(
        [
            0.5 * d.sum_log_d,
            nu / (nu - 2.0) * inv_sum,
            -a * (specfun.digamma(a) - specfun.digamma(0.5 * nu)),
            _log_student_const(nu, n),
            0.5 * n * math.log(2.0 * math.pi),
        ]
    )


def _delta1_closed_form(x: float) -> float:
    # Delta_1 / sqrt(pi) = pi erfi(sqrt x) - ln(4x) - gamma_EM - 2x 2F2(1,1;3/2,2;x)
    return (
        math.pi * specfun.erfi(math.sqrt(x))
        - math.log(4.0 * x)
        - specfun.CONSTANTS.euler_mascheroni
        - 2.0 * x * specfun.hyp2f2_11_32_2(x)
    )


def _delta1_quadrature(x: float) -> float:
    # with y = v^2: Delta_1 = 2 int_0^inf e^{-v^2} ln(1 + v^2/x) dv
    val = quad_adaptive(lambda v: math.exp(-v * v) * math.log1p(v * v / x), 0.0, math.inf, tol=1e-13, abs_tol=1e-300)
    return 2.0 * val / math.sqrt(math.pi)


def delta1_normalized(x: float) -> tuple[float, str]:
    """(E ln(1 + Y/x) for Y ~ Gamma(1/2), provenance)."""
    if x <= _DELTA1_CLOSED_FORM_MAX_X:
        try:
            return _delta1_closed_form(x), "closed_form"
        except OverflowError:
            pass
    return _delta1_quadrature(x), "quadrature"


def _x_of(nu: float, d: float) -> float:
    if nu <= 0 or d <= 0:
        raise ValueError("nu and d must be positive")
    return nu / (2.0 * d)


@lru_cache(maxsize=256)
def _scaled_chain(kmax: int, x: float) -> tuple[float, ...]:
    return tuple(specfun.scaled_expint_half_chain(kmax, x))


def _delta_normalized_with_provenance(nu: float, d: float, n: int) -> tuple[float, str]:
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _x_of(nu, d)
    # f[k-1] = e^x E_{k/2}(x); the recursion adds f at orders n/2, n/2 - 1, ...
    f = _scaled_chain(n, x)
    if n % 2 == 0:
        return math.fsum(f[1:n:2]), "closed_form"
    base, prov = delta1_normalized(x)
    return math.fsum([base, *f[2:n:2]]), prov


def delta_normalized(nu: float, d: float, n: int) -> float:
    """Delta_n / Gamma(n/2) = E ln(1 + 2 d Y / nu), Y ~ Gamma(n/2, 1)."""
    return _delta_normalized_with_provenance(nu, d, n)[0]


def delta(nu: float, d: float, n: int) -> float:
    """Delta_n = int_0^inf e^{-y} ln(1 + 2 d y / nu) y^{n/2 - 1} dy (inf once Gamma(n/2) overflows)."""
    val = delta_normalized(nu, d, n)
    lg = math.lgamma(0.5 * n) + math.log(val)
    return math.exp(lg) if lg < 709.0 else math.inf


def delta_base_1(nu: float, d: float) -> float:
    """Delta_1 from the erfi / 2F2 form (quadrature fallback for large nu/(2d))."""
    return math.sqrt(math.pi) * delta1_normalized(_x_of(nu, d))[0]


def alpha_term(nu: float, d: float, m: int) -> float:
    """alpha_m = int_0^inf e^{-y} y^{m/2} / (x + y) dy = Gamma(m/2 + 1) e^x E_{m/2+1}(x), x = nu/(2d).

    ``m >= -1``; inf once the gamma factor overflows.
    """
    if m < -1:
        raise ValueError("m must be >= -1")
    x = _x_of(nu, d)
    p = 0.5 * m + 1.0
    lg = math.lgamma(p) + math.log(specfun.scaled_expint(p, x))
    return math.exp(lg) if lg < 709.0 else math.inf


@dataclass(frozen=True)
class DeltaTable:
    """Normalized Delta values (Delta_n / Gamma(n/2)) at d_minus and d_plus,
    with the scaled recursion terms e^x E_p(x) (= alpha_{2p-2} / Gamma(p)).
    """

    n: int
    delta_minus: float
    delta_plus: float
    scaled_alpha_minus: tuple[float, ...]
    scaled_alpha_plus: tuple[float, ...]
    provenance: tuple[str, str]

    @property
    def log_gamma_half_n(self) -> float:
        return math.lgamma(0.5 * self.n)


def delta_table(nu: float, d_minus: float, d_plus: float, n: int) -> DeltaTable:
    dm, pm = _delta_normalized_with_provenance(nu, d_minus, n)
    dp, pp = _delta_normalized_with_provenance(nu, d_plus, n)
    return DeltaTable(
        n=n,
        delta_minus=dm,
        delta_plus=dp,
        scaled_alpha_minus=_scaled_chain(n, _x_of(nu, d_minus)),
        scaled_alpha_plus=_scaled_chain(n, _x_of(nu, d_plus)),
        provenance=(pm, pp),
    )


def kl_reverse_bounds(problem: StudentNormalProblem) -> BoundInterval:
    """Bounds on KLD(N(0, diag(d)) || t_nu(0, I)) (the reverse direction)."""
    nu, n, d = problem.nu, problem.n, problem.d
    table = delta_table(nu, d.d_minus, d.d_plus, n)
    common = math.fsum(
        [
            -_log_student_const(nu, n),
            -0.5 * n,
            -0.5 * n * math.log(2.0 * math.pi),
            -0.5 * d.sum_log_d,
        ]
    )
    a = problem.alpha
    lower_raw = a * table.delta_minus + common
    upper_raw = a * table.delta_plus + common
    if lower_raw > upper_raw:
        raise InternalCheckError(f"reverse KL lower {lower_raw!r} exceeds upper {upper_raw!r}")
    lower = max(0.0, lower_raw)
    upper = max(lower, upper_raw)
    return BoundInterval(
        lower,
        upper,
        clipped=(lower != lower_raw or upper != upper_raw),
        metadata={"raw": (lower_raw, upper_raw), "delta_provenance": table.provenance},
    )


def _check_nu_n(nu: float, n: int) -> None:
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
