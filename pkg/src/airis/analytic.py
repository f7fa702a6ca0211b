"""Closed-form SINR distributions, asymptotics and end-to-end outage.

Both hops share one evaluation path.  With ``Y`` a fitted SISR variable
(scale ``alpha``, weights ``chi``) and ``W = 1 + INRs`` at the receiver,

    F(x) = P(mean_snr * Y / W < x)
         = 1 - sum_k chi_k sum_{n < I psi - k} (-s)^n Delta^(n)(s) / n!,
           s = x / (alpha * mean_snr).

The inner terms are ``Delta0(s) * b_n(s)`` with non-negative Taylor weights
``b_n`` (see :func:`airis.interference.taylor_weights`).  Because
``Delta0(s) * sum_n b_n(s) = 1`` the same CDF can be written as the tail
``Delta0(s) * sum_k chi_k sum_{n >= I psi - k} b_n(s)``; that form is used
when the head form would lose digits to cancellation (``F < 1e-3``).
"""

from dataclasses import dataclass, field
from functools import cached_property
import logging
import math

import numpy as np
from scipy import optimize

from .channel import power_moment
from .interference import (
    InterfererSet,
    log_delta0,
    moment_coefficients,
    taylor_weights,
)
from .moments import (
    MomentTable,
    a2g_combined_moment,
    cascade_element_table,
    cascade_moment,
    sum_power_moment,
    truncated_direct_moment,
)
from .sisr import FitInfeasibleError, fit_sisr, max_feasible_count
from .specfun import marcum_p1, marcum_q1

log = logging.getLogger(__name__)

TAIL_SWITCH = 1e-3
TAIL_BATCH = 1024
A2G_MODES = ("conditioned", "single")


# ---------------------------------------------------------------------------
# Blockage process
# ---------------------------------------------------------------------------

def markov_steady_state(P):
    """Stationary ``(pi0, pi1)`` of a two-state chain with transition matrix ``P``."""
    P = np.asarray(P, dtype=float)
    if P.shape != (2, 2) or np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
        raise ValueError("P must be a 2x2 row-stochastic matrix")
    p01, p10 = P[0, 1], P[1, 0]
    if p01 + p10 == 0:
        raise ValueError("absorbing chain (p01 = p10 = 0) has no unique steady state")
    return p10 / (p01 + p10), p01 / (p01 + p10)


def memoryless_transition(beta):
    """Transition matrix of the memoryless blockage chain: both rows ``(beta, 1 - beta)``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    return np.array([[beta, 1.0 - beta], [beta, 1.0 - beta]])


def blockage_probability(k_ud, lambda_ud, tau):
    """``P(|g_UD|^2 < tau) = 1 - Q_1(sqrt(2K), sqrt(2 lambda tau))``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if math.isinf(tau):
        return 1.0
    return marcum_p1(math.sqrt(2.0 * k_ud), math.sqrt(2.0 * lambda_ud * tau))


def blockage_threshold(beta, k_ud, lambda_ud):
    """Threshold ``tau`` on ``|g_UD|^2`` whose blockage probability is ``beta``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if beta == 0.0:
        return 0.0
    if beta == 1.0:
        return math.inf
    a = math.sqrt(2.0 * k_ud)

    def gap(b):
        # compare on the smaller of the two tails for relative accuracy
        if beta < 0.5:
            return marcum_p1(a, b) - beta
        return (1.0 - beta) - marcum_q1(a, b)

    hi = a + 1.0
    while gap(hi) < 0:
        hi *= 2.0
    b = optimize.brentq(gap, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return b * b / (2.0 * lambda_ud)


@dataclass(frozen=True)
class BlockageModel:
    """Two-state blockage chain plus the power threshold defining blockage.

    State 0 is blocked.  ``beta`` is the blockage probability implied by
    ``tau`` through the direct-link power law; for the memoryless chain the
    blocked steady-state mass ``pi0`` equals ``beta``.
    """

    transition: np.ndarray
    steady: tuple
    beta: float
    tau: float

    @property
    def pi0(self):
        return self.steady[0]

    @property
    def pi1(self):
        return self.steady[1]

    @property
    def memoryless(self):
        return bool(np.allclose(self.transition[0], self.transition[1]))

    @classmethod
    def from_beta(cls, beta, k_ud, lambda_ud):
        P = memoryless_transition(beta)
        tau = blockage_threshold(beta, k_ud, lambda_ud)
        return cls(P, (beta, 1.0 - beta), float(beta), tau)

    @classmethod
    def from_tau(cls, tau, k_ud, lambda_ud):
        beta = blockage_probability(k_ud, lambda_ud, tau)
        return cls(memoryless_transition(beta), (beta, 1.0 - beta), beta, float(tau))

    @classmethod
    def from_transition(cls, P, tau, k_ud, lambda_ud):
        P = np.asarray(P, dtype=float)
        steady = markov_steady_state(P)
        beta = blockage_probability(k_ud, lambda_ud, tau)
        return cls(P, steady, beta, float(tau))


# ---------------------------------------------------------------------------
# Link budget and fitted distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HopFit:
    """A fitted SISR numerator together with its normalizing mean SNR."""

    fit: object
    mean_snr: float
    alpha: float

    def scale(self):
        return self.alpha * self.mean_snr


def choose_fit(mu1, mu2, psi, cap=None, count=None):
    """Fit with a given ``count`` or the largest feasible one, capped at ``cap``.

    When the cap leaves ``psi`` too small for feasibility the smallest feasible
    shape is used instead and the change is logged.
    """
    if count is None:
        count = max_feasible_count(mu1, mu2)
        if cap is not None:
            count = min(count, max(int(cap), 1))
        count = max(count, 1)
    try:
        return fit_sisr(mu1, mu2, count, psi)
    except FitInfeasibleError:
        need = mu1 * mu1 / (count * (mu2 - mu1 * mu1))
        bumped = max(int(psi), int(math.floor(need)) + 1)
        if bumped == psi or mu1 * mu1 * (count + 1) < count * mu2:
            raise
        log.info("raising SISR shape from %d to %d for I=%d (feasibility)", psi, bumped, count)
        return fit_sisr(mu1, mu2, count, bumped)


@dataclass
class LinkBudget:
    """Resolved statistics of both hops.

    Mean SNRs are linear.  ``gain_ud`` is the direct-link path gain so that
    ``|g_UD|^2 = gain_ud * |h_UD|^2``.
    """

    M: int
    N: int
    k_su: float
    g2a_mean_snr: float
    k_ur: float
    k_rd: float
    k_ud: float
    cas_mean_snr: float
    dir_mean_snr: float
    gain_ud: float
    interferers_u: InterfererSet = field(default_factory=InterfererSet)
    interferers_d: InterfererSet = field(default_factory=lambda: InterfererSet(node="D"))
    psi_su: int = 4
    psi_a2g: int = 4
    a2g_fit_order: int = None
    a2g_mode: str = "conditioned"
    strict_paper_alpha: bool = False

    def __post_init__(self):
        if self.M < 1 or self.N < 0:
            raise ValueError("need M >= 1 and N >= 0")
        for name in ("g2a_mean_snr", "dir_mean_snr", "gain_ud"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.N > 0 and not self.cas_mean_snr > 0:
            raise ValueError("cas_mean_snr must be positive when N > 0")
        if self.a2g_mode not in A2G_MODES:
            raise ValueError(f"a2g_mode must be one of {A2G_MODES}")

    @property
    def lambda_ud(self):
        return (self.k_ud + 1.0) / self.gain_ud

    @property
    def a2g_reference_snr(self):
        """Normalization of the A2G numerator (the cascade mean SNR, or the direct one without RIS)."""
        return self.cas_mean_snr if self.N > 0 else self.dir_mean_snr

    @property
    def direct_scale(self):
        """``c`` in ``gamma = c * |g_UD|^2``, the direct power relative to the reference SNR."""
        return self.dir_mean_snr / (self.gain_ud * self.a2g_reference_snr)

    # -- G2A ---------------------------------------------------------------

    def g2a_moments(self, kmax=2):
        table = MomentTable({k: power_moment(k, self.k_su) for k in range(kmax + 1)})
        return [sum_power_moment(k, self.M, table) for k in range(1, kmax + 1)]

    @cached_property
    def fit_g2a(self):
        mu1, mu2 = self.g2a_moments()
        return choose_fit(mu1, mu2, self.psi_su, count=self.M)

    def hop_g2a(self):
        return HopFit(self.fit_g2a, self.g2a_mean_snr, self.fit_g2a.alpha)

    # -- A2G ---------------------------------------------------------------

    def cascade_table(self, kmax=2):
        """``E[gamma_cas^j]`` for ``j = 0, 1/2, ..., kmax``."""
        if self.N == 0:
            return MomentTable({0.5 * i: (1.0 if i == 0 else 0.0) for i in range(2 * kmax + 1)})
        elem = cascade_element_table(2 * kmax, self.k_ur, self.k_rd)
        return MomentTable({0.5 * i: cascade_moment(i, self.N, elem) for i in range(2 * kmax + 1)})

    def direct_table(self, blockage, kmax=2, conditional=False):
        """``E[gamma^j]`` of the censored direct power; order 0 is ``E[gamma^0] = 1``.

        With ``conditional`` the moments are taken given the link is unblocked.
        """
        pi1 = 1.0 if conditional else blockage.pi1
        beta = blockage.beta
        values = {0.0: 1.0}
        for i in range(1, 2 * kmax + 1):
            values[0.5 * i] = truncated_direct_moment(
                0.5 * i, self.k_ud, self.lambda_ud, blockage.tau, pi1, beta, self.direct_scale
            )
        return MomentTable(values)

    def a2g_moments(self, blockage, state=None):
        """First two moments of the normalized A2G SNR.

        ``state`` selects the unconditional law (``None``), the blocked law
        (0, cascade only) or the unblocked law (1).
        """
        cas = self.cascade_table()
        if state == 0:
            direct = MomentTable({0.5 * i: (1.0 if i == 0 else 0.0) for i in range(5)})
        else:
            direct = self.direct_table(blockage, conditional=(state == 1))
        return a2g_combined_moment(1, cas, direct), a2g_combined_moment(2, cas, direct)

    def _fit_a2g(self, mu1, mu2):
        return choose_fit(mu1, mu2, self.psi_a2g, cap=max(self.N, 1), count=self.a2g_fit_order)

    def fit_a2g(self, blockage, state=None):
        mu1, mu2 = self.a2g_moments(blockage, state)
        return self._fit_a2g(mu1, mu2)

    def hop_a2g(self, blockage, state=None):
        fit = self.fit_a2g(blockage, state)
        alpha = fit.alpha
        if self.strict_paper_alpha and self.N > 0:
            cas = self.cascade_table()
            alpha = self._fit_a2g(cas[1], cas[2]).alpha
        return HopFit(fit, self.a2g_reference_snr, alpha)

    def a2g_components(self, blockage):
        """``[(weight, HopFit or None)]``; ``None`` marks a zero-SNR component."""
        if self.a2g_mode == "single":
            return [(1.0, self.hop_a2g(blockage))]
        parts = []
        if blockage.pi0 > 0:
            parts.append((blockage.pi0, self.hop_a2g(blockage, 0) if self.N > 0 else None))
        if blockage.pi1 > 0:
            parts.append((blockage.pi1, self.hop_a2g(blockage, 1)))
        return parts


# ---------------------------------------------------------------------------
# CDF evaluation
# ---------------------------------------------------------------------------

def _tail_order(interferers, s, start):
    """Number of Taylor weights needed for the tail sum to converge at ``s``."""
    u = 0.0
    for it in interferers.members:
        g = it.diffuse_inr
        u = max(u, g * s / (1.0 + g * s))
    if u <= 0.0:
        return start + 60
    extra = math.log(1e-19) / math.log(u) if u < 1.0 else 1e6
    return int(min(start + 40 + extra, start + 20000))


def fitted_sinr_cdf(hop, interferers, x):
    """``P(mean_snr * Y / W < x)`` for the fitted ``Y`` of ``hop``."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    out = np.zeros(flat.shape)
    pos = flat > 0
    finite = pos & np.isfinite(flat)
    out[pos & ~np.isfinite(flat)] = 1.0
    if not finite.any():
        return out.reshape(x.shape)
    fit = hop.fit
    top = fit.top
    chi = np.asarray(fit.chi)
    upper = top - 1 - np.arange(len(chi))
    s = flat[finite] / hop.scale()
    d0 = np.exp(log_delta0(interferers, s))
    b = taylor_weights(interferers, s, top - 1)
    head = np.cumsum(b, axis=1)[:, upper] @ chi
    F = 1.0 - d0 * head
    small = np.flatnonzero(F < TAIL_SWITCH)
    # batches of similar s share a truncation order sized for their largest s
    small = small[np.argsort(s[small], kind="stable")]
    for group in np.array_split(small, max(1, small.size // TAIL_BATCH)):
        if not group.size:
            continue
        nmax = _tail_order(interferers, float(s[group[-1]]), top)
        bt = taylor_weights(interferers, s[group], nmax)
        suffix = np.cumsum(bt[:, ::-1], axis=1)[:, ::-1]  # suffix[n] = sum_{m >= n} b_m
        F[group] = d0[group] * (suffix[:, top - np.arange(len(chi))] @ chi)
    out[finite] = F
    return out.reshape(x.shape)


def fitted_sinr_cdf_asymptotic(hop, interferers, x):
    """High-SNR form ``sum_k chi_k E[W^n] / n! * s^n`` with ``n = I psi - k``."""
    x = np.asarray(x, dtype=float)
    fit = hop.fit
    top = fit.top
    chi = np.asarray(fit.chi)
    coeff = moment_coefficients(interferers, top)  # E[W^n]/n!
    orders = top - np.arange(len(chi))
    s = np.where(x > 0, x, 1.0) / hop.scale()
    with np.errstate(divide="ignore"):
        log_terms = np.log(chi)[None, :] + np.log(coeff[orders])[None, :] \
            + np.outer(np.log(np.atleast_1d(s).ravel()), orders)
    val = np.exp(log_terms).sum(axis=1).reshape(np.shape(x))
    return np.where(x > 0, val, 0.0)


def cdf_g2a(budget, x):
    """CDF of the optimal G2A SINR (MRT beamforming, non-IID CCI at the UAV)."""
    return fitted_sinr_cdf(budget.hop_g2a(), budget.interferers_u, x)


def cdf_g2a_asymptotic(budget, x):
    return fitted_sinr_cdf_asymptotic(budget.hop_g2a(), budget.interferers_u, x)


def _mix(budget, blockage, x, evaluate):
    x = np.asarray(x, dtype=float)
    total = np.zeros(np.shape(x))
    for weight, hop in budget.a2g_components(blockage):
        if hop is None:
            total = total + weight * (x > 0)
        else:
            total = total + weight * evaluate(hop, budget.interferers_d, x)
    return total


def cdf_a2g(budget, blockage, x):
    """CDF of the optimal A2G SINR under the blockage model.

    ``budget.a2g_mode == "single"`` fits one SISR law to the unconditional
    normalized A2G SNR.  The default ``"conditioned"`` mode applies the same
    fit-and-expand evaluation separately to the blocked (cascade only) and
    unblocked (cascade plus truncated direct) laws and mixes them with the
    steady-state probabilities.
    """
    return _mix(budget, blockage, x, fitted_sinr_cdf)


def cdf_a2g_asymptotic(budget, blockage, x):
    return _mix(budget, blockage, x, fitted_sinr_cdf_asymptotic)


def se_threshold(rate_se):
    """SINR threshold ``2^R - 1`` for a spectral efficiency ``R`` in bps/Hz."""
    if not rate_se > 0:
        raise ValueError("rate_se must be positive")
    return 2.0 ** rate_se - 1.0


def combine_outage(f_g2a, f_a2g):
    """``1 - (1 - F1)(1 - F2)`` written without cancellation for small F."""
    return f_g2a + f_a2g - f_g2a * f_a2g


def outage_e2e(budget, blockage, rate_se):
    """End-to-end outage of the decode-and-forward link at rate ``rate_se``."""
    tau = se_threshold(rate_se)
    f1 = float(cdf_g2a(budget, tau))
    f2 = float(cdf_a2g(budget, blockage, tau))
    return combine_outage(f1, f2)
