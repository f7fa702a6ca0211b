"""Sum-of-independent-shadowed-Rician (SISR) moment matching.

A positive random variable with mean ``mu1`` and second moment ``mu2`` is
replaced by ``Y = X_1 + ... + X_I`` where each ``X_i`` is shadowed Rician with
integer Nakagami shape ``psi``.  The fitted law is a finite Gamma mixture
with common scale ``alpha`` and binomial weights ``chi``, so its PDF and CDF
are closed-form.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from .specfun import regularized_gamma_p

log = logging.getLogger(__name__)


class FitInfeasibleError(ValueError):
    """Raised when no SISR law with the requested (I, psi) has the given moments."""


@dataclass(frozen=True)
class SisrParams:
    count: int
    shape: int
    omega: float       # Nakagami power of the LoS amplitude, E[xi^2]
    sigma2: float      # diffuse power per component
    kappa: float
    omega_sr: float
    xi: float
    alpha: float
    chi: tuple

    @property
    def n_terms(self):
        return self.count * self.shape - self.count + 1

    @property
    def top(self):
        """``I * psi``, the largest Gamma shape in the mixture."""
        return self.count * self.shape

    def gamma_shapes(self):
        """Gamma shape ``I psi - k`` paired with each weight ``chi[k]``."""
        return np.arange(self.top, self.count - 1, -1, dtype=float)

    def mean(self):
        return float(np.dot(self.chi, self.gamma_shapes()) * self.alpha)

    def raw_moment(self, order):
        """Closed-form ``E[Y^order]`` of the fitted Gamma mixture."""
        shapes = self.gamma_shapes()
        log_ratio = np.array([math.lgamma(a + order) - math.lgamma(a) for a in shapes])
        return float(np.dot(self.chi, np.exp(log_ratio)) * self.alpha ** order)


def binomial_weights(n, p):
    """``C(n, k) p^k (1 - p)^(n - k)`` for ``k = 0..n`` with ``0^0 = 1``."""
    k = np.arange(n + 1)
    if p <= 0.0:
        return (k == 0).astype(float)
    if p >= 1.0:
        return (k == n).astype(float)
    log_c = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in k])
    return np.exp(log_c + k * math.log(p) + (n - k) * math.log1p(-p))


def max_feasible_count(mu1, mu2):
    """Largest ``I`` with ``I <= mu1^2 / (mu2 - mu1^2)``."""
    var = mu2 - mu1 * mu1
    if not var > 0:
        raise FitInfeasibleError("mu2 must exceed mu1^2 (positive variance)")
    return int(math.floor(mu1 * mu1 / var * (1.0 + 1e-12)))


def fit_sisr(mu1, mu2, count, shape):
    """Match the first two moments with an ``I``-fold sum of shadowed Rician laws.

    Solves ``I (Omega + sigma2) = mu1`` and the second-moment equation, giving

        Omega  = sqrt(mu1^2 (I + 1) - I mu2) * sqrt(psi / (psi - 1)) / I
        sigma2 = mu1 / I - Omega

    Raises :class:`FitInfeasibleError` naming the violated constraint.
    """
    if not mu1 > 0:
        raise FitInfeasibleError("mu1 must be positive")
    if int(count) != count or count < 1:
        raise FitInfeasibleError(f"count I must be a positive integer, got {count!r}")
    if int(shape) != shape or shape < 2:
        raise FitInfeasibleError(f"shape psi must be an integer > 1, got {shape!r}")
    count, shape = int(count), int(shape)
    if not mu2 > mu1 * mu1:
        raise FitInfeasibleError("mu2 > mu1^2 violated (need positive variance)")
    disc = mu1 * mu1 * (count + 1) - count * mu2
    if disc < -1e-12 * mu1 * mu1 * (count + 1):
        raise FitInfeasibleError(
            f"I <= mu1^2/(mu2 - mu1^2) violated: I={count}, bound={mu1 * mu1 / (mu2 - mu1 * mu1):.6g}"
        )
    disc = max(disc, 0.0)
    omega = math.sqrt(disc) * math.sqrt(shape / (shape - 1.0)) / count
    sigma2 = mu1 / count - omega
    if not sigma2 > 0:
        raise FitInfeasibleError(
            f"psi too small for I={count}: diffuse power sigma2={sigma2:.3g} <= 0 "
            f"(need psi > mu1^2 / (I (mu2 - mu1^2)) = {mu1 * mu1 / (count * (mu2 - mu1 * mu1)):.4g})"
        )
    if log.isEnabledFor(logging.DEBUG):
        alt = (mu2 - count * omega) / count
        log.debug("sigma2 moment-consistent=%.6g, alternative (mu2 - I Omega)/I=%.6g", sigma2, alt)
    kappa = (1.0 - sigma2) / sigma2
    xi = omega / (shape * sigma2)
    omega_sr = omega * (kappa + 1.0) / kappa if kappa != 0 else math.inf
    alpha = sigma2 * (xi + 1.0)
    # chi_k = C(n,k) (1/(xi+1))^k (xi/(xi+1))^(n-k): Binomial(n, 1/(1+xi)) weights
    chi = binomial_weights(count * shape - count, 1.0 / (1.0 + xi))
    return SisrParams(count, shape, omega, sigma2, kappa, omega_sr, xi, alpha, tuple(chi.tolist()))


def sisr_pdf(p, x):
    """Gamma-mixture density of the fitted SISR law (0 for ``x <= 0``)."""
    x = np.asarray(x, dtype=float)
    shapes = p.gamma_shapes()
    chi = np.asarray(p.chi)
    xs = np.where(x > 0, x, 1.0)[..., None]
    log_terms = ((shapes - 1.0) * np.log(xs / p.alpha) - xs / p.alpha
                 - np.log(p.alpha) - np.array([math.lgamma(a) for a in shapes]))
    out = np.exp(log_terms) @ chi
    return np.where(x > 0, out, 0.0)


def sisr_cdf_gamma(p, x):
    """CDF written with regularized lower incomplete gammas."""
    x = np.asarray(x, dtype=float)
    shapes = p.gamma_shapes()
    flat = np.atleast_1d(x).ravel()
    out = np.empty(flat.shape)
    for idx, xv in enumerate(flat):
        if xv <= 0:
            out[idx] = 0.0
            continue
        tail = math.fsum(c * (1.0 - regularized_gamma_p(a, xv / p.alpha))
                         for c, a in zip(p.chi, shapes))
        head = math.fsum(c * regularized_gamma_p(a, xv / p.alpha) for c, a in zip(p.chi, shapes))
        out[idx] = head if head < 0.5 else 1.0 - tail
    return out.reshape(x.shape)


def _poisson_head(y, nmax):
    """``e^{-y} y^n / n!`` for n = 0..nmax, vectorized over ``y``."""
    y = np.asarray(y, dtype=float)[..., None]
    n = np.arange(nmax + 1)
    lg = np.array([math.lgamma(i + 1.0) for i in n])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_y = np.log(y)
        terms = np.exp(np.where(n == 0, 0.0, n * log_y) - y - lg)
    return terms


def sisr_cdf(p, x):
    """Finite-sum CDF ``1 - sum_k chi_k sum_{n < I psi - k} (x/alpha)^n e^{-x/alpha} / n!``."""
    x = np.asarray(x, dtype=float)
    y = np.where(x > 0, x, 0.0) / p.alpha
    terms = _poisson_head(y, p.top - 1)
    cum = np.cumsum(terms, axis=-1)
    # for weight chi_k the inner sum runs to n = I psi - k - 1
    upper = (p.top - 1 - np.arange(len(p.chi))).astype(int)
    inner = cum[..., upper] @ np.asarray(p.chi)
    out = 1.0 - inner
    return np.where(x > 0, out, 0.0)


def sisr_cdf_small_x(p, x):
    """Leading behaviour ``sum_k chi_k (x/alpha)^(I psi - k) / (I psi - k)!`` as ``x -> 0``."""
    x = np.asarray(x, dtype=float)
    shapes = p.gamma_shapes()
    y = np.where(x > 0, x, 1.0)[..., None] / p.alpha
    log_terms = shapes * np.log(y) - np.array([math.lgamma(a + 1.0) for a in shapes])
    out = np.exp(log_terms) @ np.asarray(p.chi)
    return np.where(x > 0, out, 0.0)


def sample_sisr(p, rng, size):
    """Draw from the shadowed-Rician construction itself.

    ``X_i = (P_i + xi_i p_i)^2 + (Q_i + xi_i q_i)^2`` with ``P, Q ~ N(0, sigma2/2)``,
    ``xi_i`` Nakagami(psi, Omega) and a random unit vector ``(p_i, q_i)``.
    """
    size = int(size)
    shape = (size, p.count)
    # Nakagami amplitude: xi^2 ~ Gamma(psi, Omega/psi)
    xi_amp = np.sqrt(rng.gamma(p.shape, p.omega / p.shape, shape)) if p.omega > 0 else np.zeros(shape)
    ang = rng.uniform(0.0, 2.0 * math.pi, shape)
    sd = math.sqrt(0.5 * p.sigma2)
    re = rng.standard_normal(shape) * sd + xi_amp * np.cos(ang)
    im = rng.standard_normal(shape) * sd + xi_amp * np.sin(ang)
    return (re * re + im * im).sum(axis=1)
