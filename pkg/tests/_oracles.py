"""Independent reference computations shared by the test modules.

Everything here uses mpmath or plain scipy quadrature and none of the
package's own special functions.
"""

import math

import mpmath as mp


def student_log_const(nu, n):
    return mp.loggamma((nu + n) / 2) - mp.loggamma(nu / 2) - (n / 2) * mp.log(mp.pi * nu)


def kl_t_vs_standard_normal(nu, n, dps=40):
    """KLD(t_nu(0, I_n) || N(0, I_n)) by 1-D quadrature over R = |X|^2 / nu.

    R follows a beta-prime(n/2, nu/2) law under the Student density.  The
    integral is taken in u = ln R, which turns the slowly decaying power
    tail into an exponential one.
    """
    with mp.workdps(dps):
        nu = mp.mpf(nu)
        lb = mp.loggamma(n / mp.mpf(2)) + mp.loggamma(nu / 2) - mp.loggamma((nu + n) / 2)
        lc = student_log_const(nu, n)
        half_log_2pi = mp.log(2 * mp.pi) / 2

        def integrand(u):
            r = mp.exp(u)
            log1p_r = mp.log1p(r)
            dens = mp.exp((n / mp.mpf(2)) * u - ((nu + n) / 2) * log1p_r - lb)
            return dens * (lc - ((nu + n) / 2) * log1p_r + n * half_log_2pi + nu * r / 2)

        m = mp.log(mp.mpf(n) / nu)
        return float(mp.quad(integrand, [-mp.inf, m - 10, m, m + 10, m + 40, mp.inf]))


def kl_t_vs_diag_normal(nu, d):
    """KLD(t_nu(0, I) || N(0, diag d)) from the identity-scale value plus the scale terms."""
    n = len(d)
    if nu <= 2:
        return math.inf
    m = nu / (nu - 2)
    return (
        kl_t_vs_standard_normal(nu, n)
        + 0.5 * math.fsum(math.log(v) for v in d)
        + m * math.fsum(0.5 / v for v in d)
        - m * n / 2
    )


def reverse_kl_normal_vs_t(nu, d, dps=30):
    """KLD(N(0, diag d) || t_nu(0, I)) through a Frullani identity.

    E ln(1 + S/nu), S = sum d_i Z_i^2, equals
    int_0^inf e^{-s} (1 - prod_i (1 + 2 s d_i / nu)^{-1/2}) / s ds.
    """
    n = len(d)
    with mp.workdps(dps):
        nu = mp.mpf(nu)
        dm = [mp.mpf(v) for v in d]

        def integrand(s):
            if s == 0:
                return mp.fsum(dm) / nu
            log_prod = -mp.fsum(mp.log1p(2 * s * v / nu) for v in dm) / 2
            return mp.exp(-s) * (-mp.expm1(log_prod)) / s

        e_log = mp.quad(integrand, [0, 1, 10, mp.inf])
        alpha = (nu + n) / 2
        val = (
            -mp.mpf(n) / 2
            - (n / mp.mpf(2)) * mp.log(2 * mp.pi)
            - mp.fsum(mp.log(v) for v in dm) / 2
            - student_log_const(nu, n)
            + alpha * e_log
        )
        return float(val)


def delta_normalized_laguerre(nu, d, n, dps=30):
    """E ln(1 + 2 d Y / nu), Y ~ Gamma(n/2, 1), by generalized Gauss-Laguerre-free mpmath quadrature."""
    with mp.workdps(dps):
        x = mp.mpf(nu) / (2 * d)
        a = mp.mpf(n) / 2
        f = lambda y: mp.exp((a - 1) * mp.log(y) - y - mp.loggamma(a)) * mp.log1p(y / x)  # noqa: E731
        return float(mp.quad(f, [0, a, 4 * a + 10, mp.inf]))
