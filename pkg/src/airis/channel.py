"""Single-link Rician statistics: power-gain density, moments and samplers."""

from dataclasses import dataclass, field
import math

import numpy as np

from .specfun import laguerre, log_bessel_i


@dataclass
class RicianLink:
    """One Rician channel.

    ``gain`` is the linear path-loss gain and ``rate`` the exponential rate
    ``(K + 1) / gain`` of the non-central chi-square power law.  ``rate`` is
    derived and kept in sync by :meth:`update`.
    """

    k_factor: float
    gain: float = 1.0
    los_phase: float = 0.0
    rate: float = field(init=False)

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError("k_factor must be non-negative")
        if not self.gain > 0:
            raise ValueError("gain must be positive")
        self.rate = (self.k_factor + 1.0) / self.gain

    def update(self, **changes):
        for key, value in changes.items():
            if key == "rate":
                raise AttributeError("rate is derived from k_factor and gain")
            setattr(self, key, value)
        self.__post_init__()
        return self


def power_gain_pdf(link, z):
    """Density of ``|g|^2``: ``rate * exp(-rate z - K) * I0(2 sqrt(K rate z))``."""
    z = float(z)
    if z <= 0.0:
        return 0.0
    lam, k = link.rate, link.k_factor
    log_f = math.log(lam) - lam * z - k + log_bessel_i(0, 2.0 * math.sqrt(k * lam * z))
    return math.exp(log_f)


def power_gain_pdf_array(link, z):
    """Vectorized :func:`power_gain_pdf` using the exponentially scaled Bessel."""
    from scipy.special import i0e

    z = np.asarray(z, dtype=float)
    lam, k = link.rate, link.k_factor
    arg = 2.0 * np.sqrt(k * lam * np.clip(z, 0.0, None))
    out = lam * np.exp(-lam * z - k + arg) * i0e(arg)
    return np.where(z > 0.0, out, 0.0)


def power_moment(k, k_factor):
    """``E[|h|^k]``-type moment of the unit-mean fading power.

    ``Gamma(1 + k) L_k(-K) / (1 + K)^k``; ``k`` may be fractional (half-integer
    orders are needed for amplitude sums).  Multiply by ``gain**k`` for ``|g|^2``.
    """
    if k < 0:
        raise ValueError("moment order must be non-negative")
    if k == 0:
        return 1.0
    return math.exp(math.lgamma(1.0 + k) - k * math.log1p(k_factor)) * laguerre(k, -k_factor)


def sample_fading(link, rng, size=None):
    """Draw complex channel coefficients ``g = sqrt(gain) * h``.

    ``h = (sqrt(K) e^{j phi0} + CN(0, 1)) / sqrt(K + 1)`` with ``phi0`` the
    link's LoS phase.
    """
    return math.sqrt(link.gain) * sample_unit_fading(link.k_factor, rng, size, link.los_phase)


def sample_unit_fading(k_factor, rng, size=None, los_phase=0.0):
    """Unit-mean-power Rician coefficients ``h`` (no path loss)."""
    k_factor = np.asarray(k_factor, dtype=float)
    if size is None:
        size = k_factor.shape
    scatter = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    scatter *= math.sqrt(0.5)
    los = np.sqrt(k_factor) * np.exp(1j * np.asarray(los_phase))
    return (los + scatter) / np.sqrt(k_factor + 1.0)


def sample_unit_power(k_factor, rng, size):
    """``|h|^2`` draws without forming complex arrays (cheaper in bulk)."""
    k = np.asarray(k_factor, dtype=float)
    re = rng.standard_normal(size) * math.sqrt(0.5) + np.sqrt(k)
    im = rng.standard_normal(size) * math.sqrt(0.5)
    return (re * re + im * im) / (k + 1.0)
