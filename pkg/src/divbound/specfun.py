"""Special-function kernel.

Lambert W branches, the scaled generalized exponential integral, erfi and the
single 2F2 instance needed by the Delta base cases are implemented here.  The
log-gamma family, the regularized incomplete gamma/beta functions and erf are
thin validated wrappers over :mod:`math` and :mod:`scipy.special`.

Everything is scalar, pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special as _sp

__all__ = [
    "Accuracy",
    "SpecialConstants",
    "CONSTANTS",
    "SpecialFunctionDomainError",
    "lambert_w0",
    "lambert_wm1",
    "log_gamma",
    "digamma",
    "trigamma",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "reg_inc_beta",
    "erf",
    "erfc",
    "erfi",
    "expint_ei",
    "scaled_expint",
    "scaled_expint_half_chain",
    "hyp2f2_11_32_2",
    "normal_cdf",
]

_EPS = 2.220446049250313e-16
# Largest argument whose exp() is finite in double precision.
_MAX_EXP_ARG = 709.78


class SpecialFunctionDomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class Accuracy:
    rel_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_ACCURACY = Accuracy()


@dataclass(frozen=True)
class SpecialConstants:
    euler_mascheroni: float = 0.57721566490153286061
    inv_e: float = 0.36787944117144232160


CONSTANTS = SpecialConstants()
_INV_E = CONSTANTS.inv_e


def _check_finite(name: str, x: float) -> float:
    x = float(x)
    if math.isnan(x):
        raise SpecialFunctionDomainError(f"{name}: NaN argument")
    return x


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

def _halley(w: float, x: float, acc: Accuracy) -> tuple[float, bool]:
    for _ in range(acc.max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w, f == 0.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0 or not math.isfinite(denom):
            return w, False
        dw = f / denom
        w -= dw
        if abs(dw) <= 4.0 * _EPS * (1.0 + abs(w)):
            return w, True
    return w, False


def _bisect_w(x: float, lo: float, hi: float) -> float:
    # w*e^w - x changes sign on [lo, hi]; works on either monotone piece.
    f_lo = lo * math.exp(lo) - x
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = mid * math.exp(mid) - x
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _roundtrip_ok(w: float, x: float, acc: Accuracy) -> bool:
    resid = abs(w * math.exp(w) - x)
    return resid <= max(acc.rel_tol * abs(x), 8.0 * _EPS * _INV_E)


# 1/e = _INV_E_HI + _INV_E_LO; x + _INV_E_HI is exact near the branch point
_INV_E_HI = 0.36787944117144233
_INV_E_LO = -1.2428753672788363e-17
# W = sum mu_k p^k around the branch point, p = +-sqrt(2(ex + 1))
_BRANCH_SERIES = (
    -1.0,
    1.0,
    -1.0 / 3.0,
    11.0 / 72.0,
    -43.0 / 540.0,
    769.0 / 17280.0,
    -221.0 / 8505.0,
    680863.0 / 43545600.0,
    -1963.0 / 204120.0,
    226287557.0 / 37623398400.0,
)
# below this |p| the truncated series is exact to double precision
_SERIES_ONLY_P = 1e-3


def _near_branch(x: float) -> float | None:
    # p = sqrt(2(ex + 1)) parametrizes both branches around the branch point.
    t = math.e * ((x + _INV_E_HI) + _INV_E_LO)
    if t <= 0.0:
        return 0.0
    return math.sqrt(2.0 * t) if t < 0.1 else None


def _branch_series(p: float) -> float:
    total = 0.0
    for c in reversed(_BRANCH_SERIES):
        total = total * p + c
    return total


def lambert_w0(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Principal branch W0 on [-1/e, inf)."""
    x = _check_finite("lambert_w0", x)
    if x < -_INV_E:
        if -_INV_E - x <= 4.0 * _EPS:
            return -1.0
        raise SpecialFunctionDomainError(f"lambert_w0 requires x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    p = _near_branch(x)
    if p is not None:
        if p == 0.0:
            return -1.0
        w = _branch_series(p)
        if p < _SERIES_ONLY_P:
            # Halley cannot improve on this: w e^w - x is flat here
            return w
    elif x < 3.0:
        # Winitzki's approximation, good to a few percent on this range
        lx = math.log1p(x)
        w = lx * (1.0 - math.log1p(lx) / (2.0 + lx))
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    w, converged = _halley(w, x, acc)
    if converged and w >= -1.0 and _roundtrip_ok(w, x, acc):
        return w
    hi = max(1.0, math.log(x) + 1.0) if x > 0 else 0.0
    return _bisect_w(x, -1.0, hi)


def lambert_wm1(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Lower branch W_{-1} on [-1/e, 0)."""
    x = _check_finite("lambert_wm1", x)
    if x < -_INV_E:
        if -_INV_E - x <= 4.0 * _EPS:
            return -1.0
        raise SpecialFunctionDomainError(f"lambert_wm1 requires x >= -1/e, got {x!r}")
    if x >= 0.0:
        raise SpecialFunctionDomainError(f"lambert_wm1 requires x < 0, got {x!r}")

    p = _near_branch(x)
    if p is not None:
        if p == 0.0:
            return -1.0
        w = _branch_series(-p)
        if p < _SERIES_ONLY_P:
            return w
    else:
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
        if w > -1.0:
            w = -1.5

    w, converged = _halley(w, x, acc)
    if converged and w <= -1.0 and _roundtrip_ok(w, x, acc):
        return w
    lo = 2.0 * math.log(-x) - 10.0
    return _bisect_w(x, lo, -1.0)


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def log_gamma(x: float) -> float:
    x = _check_finite("log_gamma", x)
    if x <= 0:
        raise SpecialFunctionDomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def digamma(x: float) -> float:
    x = _check_finite("digamma", x)
    if x <= 0:
        raise SpecialFunctionDomainError(f"digamma requires x > 0, got {x!r}")
    return float(_sp.psi(x))


def trigamma(x: float) -> float:
    x = _check_finite("trigamma", x)
    if x <= 0:
        raise SpecialFunctionDomainError(f"trigamma requires x > 0, got {x!r}")
    return float(_sp.polygamma(1, x))


def reg_lower_gamma(x: float, a: float) -> float:
    """P(x; a) = gamma(x; a) / Gamma(a), the Gamma(a, 1) CDF at x."""
    x = _check_finite("reg_lower_gamma", x)
    a = _check_finite("reg_lower_gamma", a)
    if a <= 0 or x < 0:
        raise SpecialFunctionDomainError(f"reg_lower_gamma requires x >= 0, a > 0; got x={x!r}, a={a!r}")
    return float(_sp.gammainc(a, x))


def reg_upper_gamma(x: float, a: float) -> float:
    """Q(x; a) = 1 - P(x; a), computed without cancellation."""
    x = _check_finite("reg_upper_gamma", x)
    a = _check_finite("reg_upper_gamma", a)
    if a <= 0 or x < 0:
        raise SpecialFunctionDomainError(f"reg_upper_gamma requires x >= 0, a > 0; got x={x!r}, a={a!r}")
    return float(_sp.gammaincc(a, x))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """I(x; a, b), the Beta(a, b) CDF at x."""
    x = _check_finite("reg_inc_beta", x)
    if not (0.0 <= x <= 1.0) or a <= 0 or b <= 0:
        raise SpecialFunctionDomainError(
            f"reg_inc_beta requires 0 <= x <= 1, a, b > 0; got x={x!r}, a={a!r}, b={b!r}"
        )
    return float(_sp.betainc(a, b, x))


# ---------------------------------------------------------------------------
# Error functions
# ---------------------------------------------------------------------------

def erf(x: float) -> float:
    return math.erf(_check_finite("erf", x))


def erfc(x: float) -> float:
    return math.erfc(_check_finite("erfc", x))


def normal_cdf(z: float) -> float:
    """Standard normal CDF, (1 + erf(z / sqrt 2)) / 2."""
    z = _check_finite("normal_cdf", z)
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def erfi(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Imaginary error function -i erf(ix), real for real x.

    Raises OverflowError once erfi(x) ~ exp(x^2) leaves double range.
    """
    x = _check_finite("erfi", x)
    if x == 0.0:
        return 0.0
    z2 = x * x
    if z2 > _MAX_EXP_ARG - 5.0:
        raise OverflowError(f"erfi({x!r}) overflows double precision")
    # sum_k x^(2k+1) / (k! (2k+1)); every term has the sign of x
    term = x
    total = x
    k = 0
    while True:
        k += 1
        term *= z2 / k
        add = term / (2 * k + 1)
        total += add
        if abs(add) <= 0.25 * _EPS * abs(total) and k > z2:
            break
        if k > 10 * (acc.max_iter + int(z2)) + 100:
            break
    return 2.0 / math.sqrt(math.pi) * total


def hyp2f2_11_32_2(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """2F2(1, 1; 3/2, 2; x) for x >= 0 (the only instance used downstream)."""
    x = _check_finite("hyp2f2_11_32_2", x)
    if x < 0:
        raise SpecialFunctionDomainError(f"hyp2f2_11_32_2 requires x >= 0, got {x!r}")
    if x > _MAX_EXP_ARG - 5.0:
        raise OverflowError(f"2F2(1,1;3/2,2;{x!r}) overflows double precision")
    term = 1.0
    total = 1.0
    k = 0
    while True:
        term *= (k + 1) * x / ((k + 1.5) * (k + 2.0))
        k += 1
        total += term
        if term <= 0.25 * _EPS * total and k > x:
            break
        if k > 10 * (acc.max_iter + int(x)) + 100:
            break
    return total


# ---------------------------------------------------------------------------
# Exponential integrals
# ---------------------------------------------------------------------------

def _scaled_expint_cf(p: float, x: float, acc: Accuracy) -> float:
    # Modified Lentz on the continued fraction of e^x E_p(x).
    tiny = 1e-300
    b = x + p
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 50 * acc.max_iter + 1):
        an = -i * (p - 1.0 + i)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            return h
    raise ArithmeticError(f"continued fraction for E_{p}({x}) did not converge")


def _scaled_e1_series(x: float) -> float:
    # e^x E_1(x) for 0 < x < 1 via E_1 = -gamma - ln x - sum (-x)^k / (k k!)
    total = 0.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= -x / k
        add = term / k
        total += add
        if abs(add) <= 0.25 * _EPS * abs(total):
            break
    e1 = -CONSTANTS.euler_mascheroni - math.log(x) - total
    return math.exp(x) * e1


def _scaled_e_half(x: float) -> float:
    # e^x E_{1/2}(x) = e^x sqrt(pi/x) erfc(sqrt x)
    return math.exp(x) * math.sqrt(math.pi / x) * math.erfc(math.sqrt(x))


def _as_half_integer(p: float) -> int:
    twice = 2.0 * p
    k = int(round(twice))
    if k < 1 or abs(twice - k) > 1e-12:
        raise SpecialFunctionDomainError(f"order must be a positive multiple of 1/2, got {p!r}")
    return k


def scaled_expint(p: float, x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """e^x E_p(x) for x > 0 and p a positive multiple of 1/2.

    E_p(x) = int_1^inf e^{-xt} t^{-p} dt.  The scaled value lies in
    (1/(x+p), 1/(x+p-1)] for p >= 1 and never overflows.
    """
    x = _check_finite("scaled_expint", x)
    if x <= 0:
        raise SpecialFunctionDomainError(f"scaled_expint requires x > 0, got {x!r}")
    k = _as_half_integer(p)
    if x >= 1.0:
        return _scaled_expint_cf(k / 2.0, x, acc)
    return scaled_expint_half_chain(k, x, acc)[k - 1]


def scaled_expint_half_chain(kmax: int, x: float, acc: Accuracy = DEFAULT_ACCURACY) -> list[float]:
    """[e^x E_{k/2}(x) for k = 1..kmax].

    For x < 1 the upward recurrence f_{p+1} = (1 - x f_p) / p is stable (its
    error gain x/p stays below 2), so both parity chains are seeded from the
    closed forms at p = 1/2 and p = 1.  For x >= 1 each order gets its own
    continued fraction.
    """
    x = _check_finite("scaled_expint_half_chain", x)
    if x <= 0:
        raise SpecialFunctionDomainError(f"scaled_expint_half_chain requires x > 0, got {x!r}")
    if kmax < 1:
        return []
    out = [0.0] * kmax
    if x >= 1.0:
        for k in range(1, kmax + 1):
            out[k - 1] = _scaled_expint_cf(k / 2.0, x, acc)
        return out
    out[0] = _scaled_e_half(x)
    if kmax >= 2:
        out[1] = _scaled_e1_series(x)
    for k in range(3, kmax + 1):
        p_prev = (k - 2) / 2.0
        out[k - 1] = (1.0 - x * out[k - 3]) / p_prev
    return out


def expint_ei(x: float) -> float:
    """Exponential integral Ei(x) = int_{-inf}^x e^t / t dt, for x < 0."""
    x = _check_finite("expint_ei", x)
    if x >= 0:
        raise SpecialFunctionDomainError(f"expint_ei is implemented for x < 0 only, got {x!r}")
    y = -x
    if y > _MAX_EXP_ARG:
        return -math.exp(-y) * _scaled_expint_cf(1.0, y, DEFAULT_ACCURACY)
    return -math.exp(-y) * scaled_expint(1.0, y)
