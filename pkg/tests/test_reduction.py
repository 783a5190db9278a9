import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from divbound.reduction import CovariancePair, DiagonalScales, NotPositiveDefiniteError, reduce_pair


def random_spd(rng, n, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.exp(rng.uniform(0, math.log(cond), n))
    return (q * ev) @ q.T


def test_diagonal_pair_returns_ratios():
    s1 = np.diag([1.0, 2.0, 4.0])
    s2 = np.diag([3.0, 2.0, 1.0])
    d = reduce_pair(CovariancePair(s1, s2))
    assert d.d == pytest.approx((0.25, 1.0, 3.0), rel=1e-14)
    assert d.d_minus == pytest.approx(0.25)
    assert d.d_plus == pytest.approx(3.0)


def test_identical_covariances_give_unit_scales():
    rng = np.random.default_rng(1)
    s = random_spd(rng, 6)
    d = reduce_pair(CovariancePair(s, s))
    assert np.allclose(d.as_array(), 1.0, atol=1e-12)


def test_matches_whitened_eigenvalues():
    # independent path: explicit symmetric square root of S1
    rng = np.random.default_rng(7)
    for n in (1, 2, 5, 12):
        s1, s2 = random_spd(rng, n, 50.0), random_spd(rng, n, 50.0)
        w = linalg.inv(linalg.sqrtm(s1).real)
        ref = np.sort(np.linalg.eigvalsh(w @ s2 @ w.T))
        d = reduce_pair(CovariancePair(s1, s2))
        assert np.allclose(d.as_array(), ref, rtol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_reduction_invariant_under_congruence(n, seed):
    # (A S1 A^T, A S2 A^T) has the same reduced scales for invertible A
    rng = np.random.default_rng(seed)
    s1, s2 = random_spd(rng, n), random_spd(rng, n)
    a = rng.standard_normal((n, n)) + 3 * np.eye(n)
    d = reduce_pair(CovariancePair(s1, s2)).as_array()
    d2 = reduce_pair(CovariancePair(a @ s1 @ a.T, a @ s2 @ a.T)).as_array()
    assert np.allclose(d, d2, rtol=1e-7)
    assert math.fsum(np.log(d)) == pytest.approx(
        np.linalg.slogdet(s2)[1] - np.linalg.slogdet(s1)[1], abs=1e-8
    )


def test_rejects_bad_matrices():
    with pytest.raises(ValueError):
        CovariancePair(np.ones((2, 3)), np.eye(2))
    with pytest.raises(ValueError):
        CovariancePair(np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(2))
    with pytest.raises(ValueError):
        CovariancePair(np.eye(2), np.eye(3))
    with pytest.raises(NotPositiveDefiniteError):
        reduce_pair(CovariancePair(np.eye(2), np.diag([1.0, -1.0])))
    with pytest.raises(NotPositiveDefiniteError):
        reduce_pair(CovariancePair(np.diag([1.0, 0.0]), np.eye(2)))


def test_diagonal_scales_bookkeeping():
    d = DiagonalScales.from_values([2.0, 0.5, 1.0])
    assert d.n == 3
    assert (d.d_minus, d.d_plus) == (0.5, 2.0)
    assert d.sum_log_d == pytest.approx(0.0, abs=1e-16)
    p = d.prefix(2)
    assert p.d == (2.0, 0.5)
    with pytest.raises(ValueError):
        d.prefix(4)
    with pytest.raises(ValueError):
        DiagonalScales.from_values([1.0, 0.0])
    with pytest.raises(ValueError):
        DiagonalScales.from_values([])
