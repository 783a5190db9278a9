import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divbound import gamma_tv as gt
from divbound import oracle
from divbound.gamma_tv import GammaProductSpec
from divbound.oracle import McConfig

positive = st.floats(min_value=0.3, max_value=8.0)


def test_gamma_spec_validation():
    with pytest.raises(ValueError):
        GammaProductSpec((1.0, 2.0), (1.0,), (1.0,), (1.0,))
    with pytest.raises(ValueError):
        GammaProductSpec((1.0,), (-1.0,), (1.0,), (1.0,))
    s = GammaProductSpec.iid(3, 2.0, 3.0, 1.0, 1.5)
    assert s.n == 3 and s.swapped().alpha == (3.0,) * 3


def test_threshold_reference():
    s = GammaProductSpec((2.0,), (3.0,), (1.5,), (0.5,))
    ref = float(mp.loggamma(2) + 3 * mp.log(0.5) - mp.loggamma(3) - 2 * mp.log(1.5))
    assert gt.threshold_c(s) == pytest.approx(ref, rel=1e-14)


def test_threshold_separates_densities():
    # f1 >= f2 exactly where sum Z_i >= c
    s = GammaProductSpec((2.0, 0.7), (3.0, 1.1), (1.5, 0.4), (0.5, 0.9))
    c = gt.threshold_c(s)
    rng = np.random.default_rng(0)
    x = rng.gamma(2.0, 1.0, size=(2000, 2))
    a, b, l, m = (np.array(v) for v in (s.alpha, s.beta, s.lam, s.mu))
    z = np.sum((a - b) * np.log(x) + (m - l) * x, axis=1)
    lf1 = oracle.gamma_product_log_pdf(x, a, l)
    lf2 = oracle.gamma_product_log_pdf(x, b, m)
    assert np.all((lf1 >= lf2) == (z >= c))


@pytest.mark.parametrize("k,s,shape,rate", [(1.0, 0.2, 2.0, 1.0), (-0.4, 0.3, 0.7, 2.5), (0.0, 1.0, 3.0, 1.0)])
def test_z_moments_and_rho_against_mpmath(k, s, shape, rate):
    with mp.workdps(30):
        lnorm = shape * mp.log(rate) - mp.loggamma(shape)
        dens = lambda x: mp.exp(lnorm + (shape - 1) * mp.log(x) - rate * x)  # noqa: E731
        z = lambda x: k * mp.log(x) + s * x  # noqa: E731
        mean = mp.quad(lambda x: dens(x) * z(x), [0, 1, mp.inf])
        var = mp.quad(lambda x: dens(x) * (z(x) - mean) ** 2, [0, 1, mp.inf])
    m, v = gt.z_moments(k, s, shape, rate)
    assert m == pytest.approx(float(mean), rel=1e-12, abs=1e-14)
    assert v == pytest.approx(float(var), rel=1e-12)
    rng = np.random.default_rng(11)
    x = rng.gamma(shape, 1 / rate, size=2_000_000)
    w = np.abs(k * np.log(x) + s * x - m) ** 3
    rho = gt.third_abs_central_moment(k, s, shape, rate)
    assert abs(rho - w.mean()) <= 5 * w.std() / math.sqrt(w.size)


def test_identical_laws_short_circuit():
    est = gt.tv_estimate(GammaProductSpec.iid(4, 2.0, 2.0, 1.3, 1.3))
    assert est.point == 0.0 and est.interval == (0.0, 0.0)
    assert "identical_laws" in est.flags


@pytest.mark.parametrize("lam,mu", [(1.0, 2.0), (0.3, 0.25), (5.0, 1.0)])
def test_exact_1d_exponential_closed_form(lam, mu):
    x = math.log(lam / mu) / (lam - mu)
    ref = abs(math.exp(-mu * x) - math.exp(-lam * x))
    assert gt.tv_exact_1d(1.0, 1.0, lam, mu) == pytest.approx(ref, rel=1e-10)


def test_exact_1d_against_mpmath():
    a, b, l, m = 2.0, 3.5, 1.0, 1.4
    with mp.workdps(30):
        f = lambda x, s, r: mp.exp(s * mp.log(r) - mp.loggamma(s) + (s - 1) * mp.log(x) - r * x)  # noqa: E731
        g = lambda x: f(x, a, l) - f(x, b, m)  # noqa: E731
        log_ratio = lambda x: mp.log(f(x, a, l)) - mp.log(f(x, b, m))  # noqa: E731
        turn = (a - b) / (l - m)  # the log ratio is monotone on each side
        roots = [mp.findroot(log_ratio, iv, solver="anderson") for iv in ((mp.mpf("1e-3"), turn), (turn, 100))]
        ref = float(mp.quad(lambda x: abs(g(x)), [0, *sorted(roots), mp.inf]) / 2)
    assert gt.tv_exact_1d(a, b, l, m) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(positive, positive, positive, positive)
def test_estimate_is_swap_symmetric(a, b, l, m):
    s = GammaProductSpec((a, 1.0), (b, 2.0), (l, 1.0), (m, 0.5))
    e1, e2 = gt.tv_estimate(s), gt.tv_estimate(s.swapped())
    assert e1.point == pytest.approx(e2.point, abs=1e-12)
    assert e1.eps_bound == pytest.approx(e2.eps_bound, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(positive, positive, positive, positive)
def test_interval_contains_exact_scalar_tvd(a, b, l, m):
    est = gt.tv_estimate(GammaProductSpec((a,), (b,), (l,), (m,)))
    exact = gt.tv_exact_1d(a, b, l, m)
    assert est.lower - 1e-9 <= exact <= est.upper + 1e-9
    assert 0.0 <= est.lower <= est.point <= est.upper <= 1.0


def test_interval_contains_monte_carlo():
    rng = np.random.default_rng(4)
    n = 5
    a, b = rng.uniform(1, 4, n), rng.uniform(1, 4, n)
    l, m = rng.uniform(0.5, 2, n), rng.uniform(0.5, 2, n)
    est = gt.tv_estimate(GammaProductSpec(a, b, l, m))
    res = oracle.mc_tv(
        lambda r, k: oracle.sample_gamma_product(a, l, r, k),
        lambda r, k: oracle.sample_gamma_product(b, m, r, k),
        lambda x: oracle.gamma_product_log_pdf(x, a, l),
        lambda x: oracle.gamma_product_log_pdf(x, b, m),
        McConfig(samples=300_000, seed=2),
    )
    assert est.lower - 3 * res.std_error <= res.estimate <= est.upper + 3 * res.std_error


def test_eps_scales_as_inverse_root_n():
    vals = [gt.tv_estimate(GammaProductSpec.iid(n, 2.0, 2.0, 1.0, 1.2)).eps_bound * math.sqrt(n) for n in (10, 250, 4000)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)
    assert vals[1] == pytest.approx(vals[2], rel=1e-12)
    assert vals[0] == pytest.approx(2.2746, abs=1e-4)


def test_c0_is_a_parameter():
    s = GammaProductSpec.iid(3, 2.0, 2.5, 1.0, 1.0)
    assert gt.tv_estimate(s, c0=1.12).eps_bound == pytest.approx(2 * gt.tv_estimate(s).eps_bound, rel=1e-14)
    with pytest.raises(ValueError):
        gt.tv_estimate(s, c0=0.0)
