import math

import numpy as np
import pytest
from scipy import stats

from airis.analytic import BlockageModel, LinkBudget, cdf_g2a
from airis.interference import Interferer, InterfererSet
from airis.montecarlo import (
    BLOCK_TRIALS,
    EmpiricalCdf,
    SimRun,
    block_rng,
    ks_distance,
    phase_alignment_residual,
    ris_element_positions,
    sample_a2g,
    sample_g2a_sinr,
    simulate_markov_chain,
    worker_count,
)
from airis.montecarlo import _truncated_power
from conftest import scenario


def bare_budget(**over):
    base = dict(M=1, N=4, k_su=0.0, g2a_mean_snr=5.0, k_ur=0.0, k_rd=0.0, k_ud=1.0,
                cas_mean_snr=1.0, dir_mean_snr=2.0, gain_ud=1e-6)
    base.update(over)
    return LinkBudget(**base)


# -- reproducibility -------------------------------------------------------

def test_thread_count_does_not_change_samples(baseline):
    _, budget, blk = baseline
    a = sample_g2a_sinr(budget, SimRun(50_000, seed=7, parallel_chunks=1))
    b = sample_g2a_sinr(budget, SimRun(50_000, seed=7, parallel_chunks=4))
    np.testing.assert_array_equal(a, b)
    x = sample_a2g(budget, SimRun(50_000, seed=7, parallel_chunks=1), blk)
    y = sample_a2g(budget, SimRun(50_000, seed=7, parallel_chunks=3), blk)
    for key in x:
        np.testing.assert_array_equal(x[key], y[key])


def test_env_thread_cap(monkeypatch, baseline):
    _, budget, _ = baseline
    monkeypatch.setenv("AIRIS_THREADS", "2")
    assert worker_count() == 2
    a = sample_g2a_sinr(budget, SimRun(40_000, seed=3))
    monkeypatch.setenv("AIRIS_THREADS", "1")
    np.testing.assert_array_equal(a, sample_g2a_sinr(budget, SimRun(40_000, seed=3)))


def test_blocks_are_prefix_stable(baseline):
    _, budget, _ = baseline
    a = sample_g2a_sinr(budget, SimRun(2 * BLOCK_TRIALS, seed=11))
    b = sample_g2a_sinr(budget, SimRun(3 * BLOCK_TRIALS + 5, seed=11))
    np.testing.assert_array_equal(a, b[: a.size])
    assert b.size == 3 * BLOCK_TRIALS + 5


def test_seeds_and_streams_differ():
    a = block_rng(1, 0, 1).random(4)
    assert not np.array_equal(a, block_rng(2, 0, 1).random(4))
    assert not np.array_equal(a, block_rng(1, 0, 2).random(4))
    assert not np.array_equal(a, block_rng(1, 1, 1).random(4))
    np.testing.assert_array_equal(a, block_rng(1, 0, 1).random(4))


def test_simrun_validation():
    with pytest.raises(ValueError):
        SimRun(0)
    with pytest.raises(ValueError):
        SimRun(10, seed=-1)
    with pytest.raises(ValueError):
        SimRun(10, seed=1 << 64)
    assert SimRun(10, seed=(1 << 64) - 1).blocks() == [(0, 10)]


# -- empirical CDF and KS --------------------------------------------------

def test_empirical_cdf_basics():
    e = EmpiricalCdf([3.0, 1.0, 2.0, 2.0])
    assert e.n == 4
    np.testing.assert_allclose(e([0.5, 1.0, 2.0, 10.0]), [0.0, 0.25, 0.75, 1.0])
    assert e.stderr(2.0) == pytest.approx(math.sqrt(0.75 * 0.25 / 4))
    assert e.mean() == 2.0
    with pytest.raises(ValueError):
        EmpiricalCdf([])
    with pytest.raises(ValueError):
        EmpiricalCdf([1.0, float("nan")])


def test_ks_exact_matches_scipy(rng):
    x = rng.exponential(size=5_000)
    ref = stats.kstest(x, stats.expon.cdf).statistic
    assert ks_distance(EmpiricalCdf(x), stats.expon.cdf) == pytest.approx(ref, rel=1e-12)


def test_ks_subsampled_bound_is_conservative(rng):
    x = rng.exponential(size=300_000)
    e = EmpiricalCdf(x)
    exact = ks_distance(e, stats.expon.cdf, max_points=10 ** 6)
    bound = ks_distance(e, stats.expon.cdf, max_points=2_000)
    assert exact <= bound <= exact + 2.0 / 2_000


# -- samplers against closed forms ----------------------------------------

def test_single_antenna_rayleigh_is_exponential():
    budget = bare_budget()
    s = sample_g2a_sinr(budget, SimRun(200_000, seed=5))
    assert stats.kstest(s, stats.expon(scale=5.0).cdf).pvalue > 1e-3


def test_g2a_samples_match_analytic(baseline):
    _, budget, _ = baseline
    e = EmpiricalCdf(sample_g2a_sinr(budget, SimRun(200_000, seed=9)))
    assert ks_distance(e, lambda x: cdf_g2a(budget, x)) < 0.01


def test_interferer_lowers_median():
    quiet = bare_budget(M=2, k_su=1.0)
    noisy = bare_budget(M=2, k_su=1.0, interferers_u=InterfererSet((Interferer(1.0, 3.0),)))
    run = SimRun(100_000, seed=1)
    assert np.median(sample_g2a_sinr(noisy, run)) < 0.5 * np.median(sample_g2a_sinr(quiet, run))


def test_double_rayleigh_second_moment():
    n = 6
    budget = bare_budget(N=n)
    blk = BlockageModel.from_beta(1.0, budget.k_ud, budget.lambda_ud)
    cas = sample_a2g(budget, SimRun(400_000, seed=4), blk)["cascade"]
    # E|a||b| = pi/4 for unit-mean Rayleigh amplitudes
    expected = n + n * (n - 1) * (math.pi / 4) ** 2
    assert np.mean(cas ** 2) == pytest.approx(expected, rel=0.01)
    assert budget.cascade_table()[1] == pytest.approx(expected, rel=1e-12)


# -- blockage --------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.0, 0.5, 0.95])
def test_memoryless_censoring(beta):
    _, budget, blk = scenario(blockage={"beta": beta})
    out = sample_a2g(budget, SimRun(200_000, seed=2), blk)
    up = out["phi0"] == 1
    assert np.all(out["direct"][~up] == 0.0)
    assert np.all(out["direct"][up] >= blk.tau)
    p = 1 - beta
    assert abs(up.mean() - p) < 4 * math.sqrt(p * (1 - p) / up.size) + 1e-12


def test_markov_chain_occupancy_and_censoring():
    _, budget, _ = scenario()
    P = [[0.9, 0.1], [0.3, 0.7]]
    tau = BlockageModel.from_beta(0.5, budget.k_ud, budget.lambda_ud).tau
    blk = BlockageModel.from_transition(P, tau, budget.k_ud, budget.lambda_ud)
    out = sample_a2g(budget, SimRun(400_000, seed=8), blk)
    up = out["phi0"] == 1
    # lag-1 correlation 0.6 inflates the variance by (1 + 0.6) / (1 - 0.6)
    se = math.sqrt(0.25 * 0.75 / up.size * 4.0)
    assert abs(up.mean() - 0.25) < 4 * se
    assert np.all(out["direct"][up] >= blk.tau)


def test_chain_transition_frequencies():
    trace = simulate_markov_chain([[0.9, 0.1], [0.3, 0.7]], 1_000_000, seed=3)
    prev, nxt = trace[:-1], trace[1:]
    assert np.mean(nxt[prev == 0] == 1) == pytest.approx(0.1, abs=3e-3)
    assert np.mean(nxt[prev == 1] == 0) == pytest.approx(0.3, abs=5e-3)
    assert trace.mean() == pytest.approx(0.25, abs=5e-3)
    with pytest.raises(ValueError):
        simulate_markov_chain([[1.0, 0.2], [0.0, 1.0]], 10, seed=0)


def test_truncated_power_is_conditional_law(rng):
    k, thr = 3.162, 0.883
    draws = _truncated_power(k, thr, rng, 100_000)
    assert draws.min() >= thr
    sc = math.sqrt(1.0 / (2 * (k + 1)))
    law = stats.rice(math.sqrt(2 * k), scale=sc)
    s0 = law.sf(math.sqrt(thr))
    res = stats.kstest(np.sqrt(draws), lambda r: (law.cdf(r) - law.cdf(math.sqrt(thr))) / s0)
    assert res.pvalue > 1e-3


# -- explicit phase alignment ----------------------------------------------

def test_element_grid():
    cfg, _, _ = scenario(N=16)
    pos = ris_element_positions(cfg)
    assert len(pos) == 16
    assert all(p.y == cfg.R.y for p in pos)
    assert ris_element_positions(scenario(N=0)[0]) == []


@pytest.mark.parametrize("over", [{}, {"blockage": {"beta": 0.5}}, {"velocity": [10.0, -5.0, 2.0]}])
def test_phase_alignment_residual(over):
    cfg, budget, blk = scenario(**over)
    assert phase_alignment_residual(cfg, budget, blk, trials=128) < 1e-9
