import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from airis.analytic import (
    BlockageModel,
    LinkBudget,
    blockage_probability,
    blockage_threshold,
    cdf_a2g,
    cdf_a2g_asymptotic,
    cdf_g2a,
    cdf_g2a_asymptotic,
    choose_fit,
    combine_outage,
    fitted_sinr_cdf,
    fitted_sinr_cdf_asymptotic,
    markov_steady_state,
    memoryless_transition,
    outage_e2e,
    se_threshold,
)
from airis.channel import RicianLink, power_gain_pdf, sample_unit_power
from airis.interference import Interferer, InterfererSet
from airis.sisr import FitInfeasibleError, sisr_cdf, sisr_cdf_gamma, sisr_cdf_small_x
from conftest import scenario

TAU = se_threshold(0.5)


# -- blockage -------------------------------------------------------------

def test_steady_state_example():
    assert markov_steady_state([[0.9, 0.1], [0.3, 0.7]]) == pytest.approx((0.75, 0.25))
    assert markov_steady_state(memoryless_transition(0.3)) == pytest.approx((0.3, 0.7))


def test_steady_state_errors():
    with pytest.raises(ValueError, match="absorbing"):
        markov_steady_state(np.eye(2))
    with pytest.raises(ValueError):
        markov_steady_state([[0.5, 0.6], [0.3, 0.7]])
    with pytest.raises(ValueError):
        memoryless_transition(1.5)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_steady_state_is_stationary(p01, p10):
    if p01 + p10 == 0:
        return
    P = np.array([[1 - p01, p01], [p10, 1 - p10]])
    pi = np.array(markov_steady_state(P))
    np.testing.assert_allclose(pi @ P, pi, atol=1e-12)
    assert pi.sum() == pytest.approx(1.0)


def test_blockage_probability_rayleigh():
    # K = 0: P(|g|^2 < tau) = 1 - exp(-lambda tau)
    assert blockage_probability(0.0, 2.0, 0.4) == pytest.approx(-math.expm1(-0.8), rel=1e-13)
    assert blockage_probability(1.0, 1.0, 0.0) == 0.0
    assert blockage_probability(1.0, 1.0, math.inf) == 1.0


def test_blockage_probability_quadrature():
    k, lam, tau = 3.162, 4.162 / 0.24, 0.2
    link = RicianLink(k, gain=0.24)
    ref, _ = integrate.quad(lambda z: power_gain_pdf(link, z), 0.0, tau, epsrel=1e-12)
    assert blockage_probability(k, lam, tau) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("beta", [1e-6, 0.01, 0.3, 0.5, 0.95, 1 - 1e-9])
@pytest.mark.parametrize("k", [0.0, 1.0, 3.162, 20.0])
def test_threshold_inverts_probability(beta, k):
    lam = (k + 1) / 0.7
    tau = blockage_threshold(beta, k, lam)
    assert blockage_probability(k, lam, tau) == pytest.approx(beta, rel=1e-9)


def test_threshold_edges():
    assert blockage_threshold(0.0, 1.0, 1.0) == 0.0
    assert blockage_threshold(1.0, 1.0, 1.0) == math.inf
    with pytest.raises(ValueError):
        blockage_threshold(-0.1, 1.0, 1.0)


def test_blockage_model_constructors():
    k, lam = 3.162, 4.162
    m = BlockageModel.from_beta(0.5, k, lam)
    assert (m.pi0, m.pi1) == (0.5, 0.5) and m.memoryless
    assert m.tau / (1 / lam * (k + 1)) == pytest.approx(0.883, abs=1e-3)
    back = BlockageModel.from_tau(m.tau, k, lam)
    assert back.beta == pytest.approx(0.5, rel=1e-10)
    chain = BlockageModel.from_transition([[0.9, 0.1], [0.3, 0.7]], m.tau, k, lam)
    assert chain.pi0 == pytest.approx(0.75) and not chain.memoryless


# -- fit selection --------------------------------------------------------

def test_choose_fit_bumps_shape():
    # CV^2 = 0.2 with I = 1 needs psi > 1 / 0.2 = 5
    mu1, mu2 = 1.0, 1.2
    fit = choose_fit(mu1, mu2, 4, cap=1)
    assert fit.count == 1 and fit.shape == 6
    assert fit.mean() == pytest.approx(mu1)


def test_choose_fit_picks_largest_feasible_count():
    fit = choose_fit(1.0, 1.2, 8)
    assert fit.count == 5
    assert choose_fit(1.0, 1.2, 8, cap=3).count == 3


def test_g2a_fit_matches_moments(baseline):
    _, budget, _ = baseline
    mu1, mu2 = budget.g2a_moments()
    assert mu1 == pytest.approx(budget.M)
    fit = budget.fit_g2a
    assert fit.count == budget.M
    assert fit.raw_moment(2) == pytest.approx(mu2, rel=1e-10)


# -- CDF against an independent quadrature ---------------------------------

def quad_cdf(hop, interferer, x):
    """P(mean_snr Y / (1 + INR |h|^2) < x) by integrating the fitted CDF over the fading law."""
    link = RicianLink(interferer.k_factor, gain=interferer.mean_inr)
    f = lambda z: float(sisr_cdf(hop.fit, x * (1 + z) / hop.mean_snr)) * power_gain_pdf(link, z)
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0, epsrel=1e-11, limit=500)
    return val


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("k,inr", [(0.0, 3.0), (2.0, 50.0), (1.0, 0.2)])
def test_fitted_cdf_single_interferer_quadrature(baseline, k, inr):
    _, budget, _ = baseline
    hop = budget.hop_g2a()
    it = Interferer(k, inr)
    iset = InterfererSet((it,))
    # covers the head form and the tail form (values far below the switch)
    for x in np.geomspace(1e-3, 1e3, 13) * hop.mean_snr / max(1.0, inr):
        ref = quad_cdf(hop, it, x)
        got = float(fitted_sinr_cdf(hop, iset, x))
        assert got == pytest.approx(ref, rel=1e-7, abs=1e-15)


def test_fitted_cdf_many_interferers_conditional_mc(baseline, rng):
    _, budget, _ = baseline
    hop, iset = budget.hop_g2a(), budget.interferers_u
    w = 1.0 + sum(it.mean_inr * sample_unit_power(it.k_factor, rng, 400_000) for it in iset.members)
    for x in (0.3, 1.0, 5.0, 30.0):
        vals = sisr_cdf(hop.fit, x * w / hop.mean_snr)
        est, se = vals.mean(), vals.std() / math.sqrt(w.size)
        assert abs(float(fitted_sinr_cdf(hop, iset, x)) - est) < 4 * se + 1e-12


def test_cdf_without_interference_is_fitted_law(baseline):
    _, budget, _ = baseline
    hop = budget.hop_g2a()
    x = np.geomspace(1e-2, 1e3, 20)
    # W = 1 plus no interferers means only the unit noise term remains
    np.testing.assert_allclose(fitted_sinr_cdf(hop, InterfererSet(), x),
                               sisr_cdf_gamma(hop.fit, x / hop.mean_snr), rtol=1e-9, atol=1e-15)


def test_zero_interference_asymptote(baseline):
    _, budget, _ = baseline
    hop = budget.hop_g2a()
    x = np.geomspace(1e-3, 1.0, 7)
    np.testing.assert_allclose(fitted_sinr_cdf_asymptotic(hop, InterfererSet(), x),
                               sisr_cdf_small_x(hop.fit, x / hop.mean_snr), rtol=1e-12)


def test_asymptote_ratio_tends_to_one(baseline):
    _, budget, _ = baseline
    hop, iset = budget.hop_g2a(), budget.interferers_u
    x = hop.mean_snr * np.array([1e-2, 1e-3, 1e-4])
    err = np.abs(fitted_sinr_cdf_asymptotic(hop, iset, x) / fitted_sinr_cdf(hop, iset, x) - 1)
    # the relative error shrinks linearly with x
    assert np.all(err[1:] < 0.2 * err[:-1]) and err[-1] < 2e-3


def test_cdf_edges(baseline):
    _, budget, blk = baseline
    assert cdf_g2a(budget, 0.0) == 0.0
    assert cdf_g2a(budget, -1.0) == 0.0
    assert cdf_g2a(budget, np.inf) == 1.0
    assert float(cdf_a2g(budget, blk, 1e12)) == pytest.approx(1.0)


# -- structural properties -------------------------------------------------

GRID = np.geomspace(1e-4, 1e4, 200)


@pytest.mark.parametrize("beta", [0.0, 0.5, 0.95])
def test_cdfs_monotone_on_grid(beta):
    _, budget, blk = scenario(blockage={"beta": beta})
    for f in (cdf_g2a(budget, GRID), cdf_a2g(budget, blk, GRID)):
        assert np.all(np.diff(f) >= -1e-12)
        assert np.all((f >= 0) & (f <= 1 + 1e-12))


def test_cdf_decreasing_in_antennas():
    vals = [float(cdf_g2a(scenario(M=m)[1], TAU)) for m in range(1, 7)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_cdf_decreasing_in_elements():
    vals = []
    for n in (4, 16, 36, 64):
        _, budget, blk = scenario(N=n)
        vals.append(float(cdf_a2g(budget, blk, TAU)))
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_outage_monotone_in_power():
    ops = []
    for p in (0.0, 10.0, 20.0, 30.0, 40.0):
        _, budget, blk = scenario(p_s_dbm=p, p_u_dbm=p)
        ops.append(outage_e2e(budget, blk, 0.5))
    assert all(a > b for a, b in zip(ops, ops[1:]))


def test_outage_monotone_in_beta():
    ops = []
    for beta in (0.0, 0.25, 0.5, 0.75, 0.95, 1.0):
        _, budget, blk = scenario(blockage={"beta": beta})
        ops.append(outage_e2e(budget, blk, 0.5))
    assert all(a <= b for a, b in zip(ops, ops[1:]))


def test_full_blockage_is_cascade_only():
    _, budget, blk = scenario(blockage={"beta": 1.0})
    cas = budget.cascade_table()
    hop = budget.hop_a2g(blk, 0)
    assert hop.fit.mean() == pytest.approx(cas[1])
    assert hop.fit.raw_moment(2) == pytest.approx(cas[2], rel=1e-10)
    _, single, blk_p = scenario(blockage={"beta": 1.0}, a2g_mode="single")
    x = np.geomspace(1e-3, 1e2, 30)
    np.testing.assert_allclose(cdf_a2g(budget, blk, x), cdf_a2g(single, blk_p, x), rtol=1e-10)


def test_unblocked_mode_equivalence_at_beta_zero():
    # no blockage: conditioned and unconditional laws coincide
    _, cond, blk = scenario()
    _, single, _ = scenario(a2g_mode="single")
    x = np.geomspace(1e-2, 1e2, 15)
    np.testing.assert_allclose(cdf_a2g(cond, blk, x), cdf_a2g(single, blk, x), rtol=1e-12)


def test_direct_moment_conditioning(baseline):
    _, budget, _ = scenario(blockage={"beta": 0.5})
    blk = BlockageModel.from_beta(0.5, budget.k_ud, budget.lambda_ud)
    uncond = budget.direct_table(blk)
    cond = budget.direct_table(blk, conditional=True)
    assert uncond[0] == cond[0] == 1.0
    assert uncond[1] == pytest.approx(0.5 * cond[1])


@pytest.mark.parametrize("beta", [0.5, 0.95])
def test_single_fit_infeasible_under_blockage(beta):
    _, budget, blk = scenario(blockage={"beta": beta}, a2g_mode="single")
    with pytest.raises(FitInfeasibleError, match="I <= mu1"):
        cdf_a2g(budget, blk, TAU)


def test_asymptote_a2g_mixture(baseline):
    _, budget, blk = scenario(blockage={"beta": 0.5})
    x = budget.a2g_reference_snr * np.array([1e-3, 1e-4])
    ratio = cdf_a2g_asymptotic(budget, blk, x) / cdf_a2g(budget, blk, x)
    assert abs(ratio[-1] - 1) < abs(ratio[0] - 1) + 1e-12


def test_outage_helpers():
    assert se_threshold(1.0) == 1.0
    assert combine_outage(0.1, 0.2) == pytest.approx(1 - 0.9 * 0.8)
    assert combine_outage(1e-12, 1e-12) == pytest.approx(2e-12, rel=1e-9)
    with pytest.raises(ValueError):
        se_threshold(0.0)


def test_link_budget_validation():
    base = dict(M=2, N=4, k_su=1.0, g2a_mean_snr=10.0, k_ur=1.0, k_rd=1.0, k_ud=1.0,
                cas_mean_snr=1.0, dir_mean_snr=1.0, gain_ud=1e-6)
    LinkBudget(**base)
    for bad in ({"M": 0}, {"N": -1}, {"g2a_mean_snr": 0.0}, {"cas_mean_snr": 0.0}, {"a2g_mode": "x"}):
        with pytest.raises(ValueError):
            LinkBudget(**{**base, **bad})
    nris = LinkBudget(**{**base, "N": 0, "cas_mean_snr": 0.0})
    assert nris.a2g_reference_snr == nris.dir_mean_snr
