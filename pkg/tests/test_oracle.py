import math

import numpy as np
import pytest
from scipy import special

from divbound import oracle
from divbound.core import OracleError, QuadratureError
from divbound.oracle import McConfig


def normal_pair(var2):
    s1 = lambda rng, m: rng.standard_normal((m, 1))  # noqa: E731
    s2 = lambda rng, m: math.sqrt(var2) * rng.standard_normal((m, 1))  # noqa: E731
    l1 = lambda x: oracle.diag_normal_log_pdf(x, [1.0])  # noqa: E731
    l2 = lambda x: oracle.diag_normal_log_pdf(x, [var2])  # noqa: E731
    return s1, s2, l1, l2


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def test_mc_tv_gaussian_closed_form():
    s1, s2, l1, l2 = normal_pair(4.0)
    res = oracle.mc_tv(s1, s2, l1, l2, McConfig(samples=1_000_000, seed=3))
    # crossing at t^2 = (8/3) ln 2; TVD = erf(t/sqrt2) - erf(t/(2 sqrt2)) (mpmath: 0.322674568834769)
    assert abs(res.estimate - 0.322674568834769) <= 3 * res.std_error
    assert res.samples_used == 1_000_000


def test_mc_kl_gaussian_closed_form():
    s1, _, l1, l2 = normal_pair(4.0)
    res = oracle.mc_kl(s1, l1, l2, McConfig(samples=1_000_000, seed=1))
    assert abs(res.estimate - 0.5 * (0.25 - 1 + math.log(4))) <= 3 * res.std_error


@pytest.mark.parametrize("seed", range(50))
def test_mc_tv_self_is_zero(seed):
    rng = np.random.default_rng(seed)
    nu = float(rng.uniform(0.5, 10))
    n = int(rng.integers(1, 6))
    s = lambda r, m: oracle.sample_student(nu, n, r, m)  # noqa: E731
    lp = lambda x: oracle.student_log_pdf(x, nu)  # noqa: E731
    res = oracle.mc_tv(s, s, lp, lp, McConfig(samples=20_000, seed=seed, chunk=4096))
    assert abs(res.estimate) <= 3 * res.std_error + 1e-12


def test_mc_kl_self_is_zero():
    d = [0.5, 2.0]
    s = lambda r, m: oracle.sample_diag_normal(d, r, m)  # noqa: E731
    lp = lambda x: oracle.diag_normal_log_pdf(x, d)  # noqa: E731
    res = oracle.mc_kl(s, lp, lp, McConfig(samples=10_000))
    assert res.estimate == 0.0 and res.std_error == 0.0


def test_reproducible_regardless_of_workers(monkeypatch):
    s1, s2, l1, l2 = normal_pair(2.0)
    monkeypatch.delenv("DIVBOUND_THREADS", raising=False)
    a = oracle.mc_tv(s1, s2, l1, l2, McConfig(samples=300_000, seed=42, workers=1))
    b = oracle.mc_tv(s1, s2, l1, l2, McConfig(samples=300_000, seed=42, workers=4))
    assert a == b
    k1 = oracle.mc_kl(s1, l1, l2, McConfig(samples=300_001, seed=9, workers=1))
    k2 = oracle.mc_kl(s1, l1, l2, McConfig(samples=300_001, seed=9, workers=3))
    assert k1 == k2
    monkeypatch.setenv("DIVBOUND_THREADS", "1")
    assert oracle.mc_tv(s1, s2, l1, l2, McConfig(samples=300_000, seed=42, workers=8)) == a
    c = oracle.mc_tv(s1, s2, l1, l2, McConfig(samples=300_000, seed=43))
    assert c != a


def test_non_finite_log_pdf_is_reported():
    s = lambda r, m: r.standard_normal((m, 1))  # noqa: E731
    bad = lambda x: np.full(x.shape[0], np.nan)  # noqa: E731
    with pytest.raises(OracleError, match="non-finite"):
        oracle.mc_tv(s, s, bad, bad, McConfig(samples=10))


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(samples=0)
    with pytest.raises(ValueError):
        McConfig(chunk=0)
    with pytest.raises(ValueError):
        McConfig(seed=-1)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def test_student_marginal_variance():
    rng = oracle.chunk_rng(11, 0)
    x = oracle.sample_student(5.0, 2, rng, 2_000_000)[:, 0] ** 2
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - 5.0 / 3.0) <= 4 * se


def test_diag_normal_and_gamma_moments():
    rng = oracle.chunk_rng(12, 0)
    d = np.array([0.3, 1.0, 2.5])
    x = oracle.sample_diag_normal(d, rng, 500_000)
    v = x**2
    assert np.all(np.abs(v.mean(0) - d) <= 4 * v.std(0) / math.sqrt(v.shape[0]))
    g = oracle.sample_gamma_product([2.0, 0.5], [1.0, 3.0], rng, 500_000)
    se = g.std(0) / math.sqrt(g.shape[0])
    assert np.all(np.abs(g.mean(0) - np.array([2.0, 0.5 / 3.0])) <= 4 * se)
    assert oracle.sample_student(3.0, 4, rng).shape == (4,)


def test_log_pdfs_against_scipy():
    from scipy import stats

    x = np.array([[0.3, -1.2, 2.0]])
    assert oracle.student_log_pdf(x, 3.5)[0] == pytest.approx(
        stats.multivariate_t(loc=np.zeros(3), shape=np.eye(3), df=3.5).logpdf(x[0]), rel=1e-12
    )
    d = [0.5, 1.0, 3.0]
    assert oracle.diag_normal_log_pdf(x, d)[0] == pytest.approx(
        stats.multivariate_normal(np.zeros(3), np.diag(d)).logpdf(x[0]), rel=1e-12
    )
    g = np.array([[0.5, 2.0]])
    ref = stats.gamma(2.0, scale=1.0).logpdf(0.5) + stats.gamma(0.7, scale=1 / 3.0).logpdf(2.0)
    assert oracle.gamma_product_log_pdf(g, [2.0, 0.7], [1.0, 3.0])[0] == pytest.approx(ref, rel=1e-12)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def test_quadrature_basics():
    assert oracle.quad_adaptive(lambda y: math.exp(-y), 0, math.inf) == pytest.approx(1.0, rel=1e-12)
    assert oracle.quad_adaptive(lambda t: t**-0.5, 0, 1, points=[1e-6]) == pytest.approx(2.0, rel=1e-10)
    assert oracle.quad_adaptive(lambda t: t, 1, 0) == pytest.approx(-0.5)
    assert oracle.quad_gauss_laguerre(lambda y: np.ones_like(y)) == pytest.approx(1.0, rel=1e-13)


def test_dual_quadrature_agreement():
    # int e^{-y} ln(1+y) dy = e E_1(1)
    ref = math.e * special.exp1(1.0)
    a = oracle.quad_adaptive(lambda y: math.exp(-y) * math.log1p(y), 0, math.inf, tol=1e-12)
    b = oracle.quad_gauss_laguerre(np.log1p, nodes=200)
    assert a == pytest.approx(ref, rel=1e-10)
    assert b == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("nu,d", [(0.5, 0.5), (1.0, 2.0), (3.0, 1.0), (10.0, 0.5)])
@pytest.mark.parametrize("n", [1, 2, 7, 30])
def test_dual_quadrature_on_delta_integrands(nu, d, n):
    x = nu / (2 * d)
    f = lambda y: math.exp(-y) * y ** (n / 2 - 1) * math.log1p(y / x)  # noqa: E731
    a = oracle.quad_adaptive(f, 0, math.inf, tol=1e-12, points=[x, n / 2])
    b = oracle.quad_gauss_laguerre(lambda y: np.log1p(y / x), nodes=200, alpha=n / 2 - 1)
    assert a == pytest.approx(b, rel=1e-9)


def test_quadrature_failure_is_reported():
    with pytest.raises(QuadratureError) as info:
        oracle.quad_adaptive(lambda t: 1.0 / t, 0.0, 1.0, limit=20)
    assert info.value.error > 0
    with pytest.raises(ValueError):
        oracle.quad_gauss_laguerre(np.exp, nodes=0)
