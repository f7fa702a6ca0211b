import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate, stats

from airis.sisr import (
    FitInfeasibleError,
    binomial_weights,
    fit_sisr,
    max_feasible_count,
    sample_sisr,
    sisr_cdf,
    sisr_cdf_gamma,
    sisr_cdf_small_x,
    sisr_pdf,
)


def feasible_moments(mu1, cv2):
    return mu1, mu1 * mu1 * (1.0 + cv2)


@pytest.mark.parametrize("count,shape,cv2", [(1, 2, 0.8), (2, 4, 0.3), (4, 4, 0.2), (8, 6, 0.05), (3, 10, 0.3)])
def test_moment_roundtrip(count, shape, cv2):
    mu1, mu2 = feasible_moments(3.7, cv2)
    p = fit_sisr(mu1, mu2, count, shape)
    assert p.mean() == pytest.approx(mu1, rel=1e-12)
    assert p.raw_moment(2) == pytest.approx(mu2, rel=1e-10)
    assert math.fsum(p.chi) == pytest.approx(1.0, abs=1e-13)
    assert len(p.chi) == p.n_terms


@given(st.integers(1, 8), st.integers(2, 12), st.floats(0.01, 1.0), st.floats(1e-3, 1e3))
def test_moment_roundtrip_property(count, shape, frac, mu1):
    # CV^2 strictly inside (1/(I psi), 1/I]
    lo, hi = 1.0 / (count * shape), 1.0 / count
    cv2 = lo + frac * (hi - lo)
    assume(cv2 > lo * (1 + 1e-6))
    p = fit_sisr(*feasible_moments(mu1, cv2), count, shape)
    assert p.sigma2 > 0 and p.omega >= 0 and p.alpha > 0
    assert p.mean() == pytest.approx(mu1, rel=1e-9)
    assert p.raw_moment(2) == pytest.approx(mu1 * mu1 * (1 + cv2), rel=1e-8)


def test_exponential_limit():
    # CV^2 = 1, I = 1: Omega = 0, law is exponential
    p = fit_sisr(2.0, 8.0, 1, 4)
    assert p.omega == pytest.approx(0.0, abs=1e-12)
    x = np.array([0.1, 1.0, 5.0])
    np.testing.assert_allclose(sisr_cdf(p, x), -np.expm1(-x / 2.0), rtol=1e-12)


def test_infeasible_count():
    with pytest.raises(FitInfeasibleError, match="I <= mu1\\^2"):
        fit_sisr(1.0, 2.5, 1, 4)
    with pytest.raises(FitInfeasibleError, match="psi too small"):
        fit_sisr(1.0, 1.05, 1, 4)
    with pytest.raises(FitInfeasibleError):
        fit_sisr(1.0, 0.5, 1, 4)
    with pytest.raises(FitInfeasibleError):
        fit_sisr(1.0, 1.5, 0, 4)
    with pytest.raises(FitInfeasibleError):
        fit_sisr(1.0, 1.5, 1, 1)
    with pytest.raises(FitInfeasibleError):
        fit_sisr(-1.0, 1.5, 1, 4)


def test_max_feasible_count():
    assert max_feasible_count(1.0, 1.25) == 4
    assert max_feasible_count(1.0, 1.2) == 5
    with pytest.raises(FitInfeasibleError):
        max_feasible_count(1.0, 1.0)


def test_binomial_weights():
    np.testing.assert_allclose(binomial_weights(5, 0.3), stats.binom.pmf(np.arange(6), 5, 0.3), rtol=1e-13)
    assert list(binomial_weights(3, 0.0)) == [1, 0, 0, 0]
    assert list(binomial_weights(3, 1.0)) == [0, 0, 0, 1]


@pytest.fixture(scope="module")
def fitted():
    return fit_sisr(*feasible_moments(1.3, 0.18), 4, 4)


def test_pdf_integrates_to_cdf(fitted):
    for x in (0.3, 1.0, 2.5):
        val, _ = integrate.quad(lambda t: float(sisr_pdf(fitted, t)), 0.0, x, epsrel=1e-12)
        assert val == pytest.approx(float(sisr_cdf(fitted, x)), rel=1e-10)


def test_two_cdf_forms_agree(fitted):
    x = np.concatenate([np.geomspace(1e-3, 0.1, 8), np.linspace(0.2, 6.0, 30)])
    np.testing.assert_allclose(sisr_cdf(fitted, x), sisr_cdf_gamma(fitted, x), rtol=1e-10, atol=1e-15)


def test_cdf_edges(fitted):
    assert float(sisr_cdf(fitted, 0.0)) == 0.0
    assert float(sisr_cdf(fitted, -1.0)) == 0.0
    assert float(sisr_cdf(fitted, 1e3)) == pytest.approx(1.0)


def test_small_x_asymptote(fitted):
    x = np.array([1e-4, 1e-3])
    ratio = sisr_cdf_gamma(fitted, x) / sisr_cdf_small_x(fitted, x)
    np.testing.assert_allclose(ratio, 1.0, atol=1e-2)


@given(st.lists(st.floats(0.0, 20.0), min_size=2, max_size=30))
def test_cdf_monotone(xs):
    p = fit_sisr(*feasible_moments(2.0, 0.3), 2, 3)
    f = sisr_cdf(p, np.sort(xs))
    assert np.all(np.diff(f) >= -1e-14)
    assert np.all((f >= 0) & (f <= 1 + 1e-14))


@pytest.mark.parametrize("count,shape,cv2", [(1, 4, 0.7), (4, 4, 0.2), (3, 8, 0.1)])
def test_sampler_matches_cdf(count, shape, cv2, rng):
    p = fit_sisr(*feasible_moments(1.0, cv2), count, shape)
    y = sample_sisr(p, rng, 200_000)
    res = stats.kstest(y, lambda v: sisr_cdf(p, v))
    assert res.statistic < 0.005
