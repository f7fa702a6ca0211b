"""Laplace-domain machinery for non-IID Rician co-channel interference.

Each interferer contributes ``mean_inr * |h|^2`` with ``|h|^2`` a unit-mean
Rician power.  Its transform is

    L(s) = exp(-K + K / (1 + g s)) / (1 + g s),   g = mean_inr / (1 + K),

i.e. the textbook form written with the *diffuse* INR ``g``.  Plugging the
mean INR straight into that form would describe an interferer whose power is
``(1 + K)`` times too large.

``delta_n`` returns the ``n``-th derivative of ``e^{-s} prod_l L_l(s)``, the
transform of ``W = 1 + sum of INRs``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .moments import partitions


@dataclass(frozen=True)
class Interferer:
    k_factor: float
    mean_inr: float

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError("k_factor must be non-negative")
        if not self.mean_inr > 0:
            raise ValueError("mean_inr must be positive")

    @property
    def diffuse_inr(self):
        return self.mean_inr / (1.0 + self.k_factor)


@dataclass(frozen=True)
class InterfererSet:
    aerial: tuple = field(default_factory=tuple)
    ground: tuple = field(default_factory=tuple)
    node: str = "U"

    def __post_init__(self):
        object.__setattr__(self, "aerial", tuple(_as_interferer(i) for i in self.aerial))
        object.__setattr__(self, "ground", tuple(_as_interferer(i) for i in self.ground))

    @property
    def members(self):
        return self.aerial + self.ground

    def __len__(self):
        return len(self.aerial) + len(self.ground)


def _as_interferer(item):
    if isinstance(item, Interferer):
        return item
    k, g = item
    return Interferer(float(k), float(g))


def laplace_inr(k_factor, mean_inr, s):
    """``E[exp(-s * mean_inr * |h|^2)]`` for a unit-mean Rician power ``|h|^2``."""
    g = mean_inr / (1.0 + k_factor)
    t = 1.0 + g * s
    return math.exp(-k_factor + k_factor / t) / t


def delta_term(i, k_factor, mean_inr, s):
    """``i``-th derivative of ``log L(s)`` for one interferer.

    ``(i-1)! (-g)^i / (1 + g s)^i * (1 + i K / (1 + g s))`` with ``g`` the
    diffuse INR.
    """
    if i < 1:
        raise ValueError("derivative order must be >= 1")
    g = mean_inr / (1.0 + k_factor)
    t = 1.0 + g * s
    return math.factorial(i - 1) * (-g / t) ** i * (1.0 + i * k_factor / t)


def s_aggregate(i, interferers, s):
    """Sum of the per-interferer ``delta_term`` minus ``C_i`` (``C_1 = 1``, else 0)."""
    total = math.fsum(delta_term(i, it.k_factor, it.mean_inr, s) for it in interferers.members)
    return total - (1.0 if i == 1 else 0.0)


def log_delta0(interferers, s):
    """``log(e^{-s} prod_l L_l(s))``, vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    out = -s
    for it in interferers.members:
        t = 1.0 + it.diffuse_inr * s
        out = out - it.k_factor + it.k_factor / t - np.log(t)
    return out


def delta_n_partition(n, interferers, s):
    """``n``-th derivative via the explicit partition (Faa di Bruno) expansion.

    ``Delta0(s) * sum_r sum_{partitions of n into r parts}
    n! prod_i S_{p_i}^{nu_i} / nu_i! / prod_j p_j!``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    d0 = math.exp(float(log_delta0(interferers, s)))
    if n == 0:
        return d0
    S = [None] + [s_aggregate(i, interferers, s) for i in range(1, n + 1)]
    acc = []
    nfact = math.factorial(n)
    for r in range(1, n + 1):
        for sig in partitions(n, r):
            prod = sig.weight
            for value, nu in sig.distinct:
                prod *= S[value] ** nu
            acc.append(prod)
    return d0 * nfact * math.fsum(acc)


def scaled_log_derivatives(interferers, s, nmax):
    """``c_j = S_j(s) (-s)^j / j!`` for ``j = 0..nmax`` (column 0 is zero).

    All entries are non-negative:
    ``c_j = sum_l u_l^j (1/j + K_l v_l) + s [j == 1]`` with
    ``u_l = g_l s / (1 + g_l s)`` and ``v_l = 1 / (1 + g_l s)``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    j = np.arange(nmax + 1, dtype=float)
    c = np.zeros((s.size, nmax + 1))
    jj = j[1:]
    for it in interferers.members:
        g = it.diffuse_inr
        u = g * s / (1.0 + g * s)
        v = 1.0 / (1.0 + g * s)
        with np.errstate(divide="ignore"):
            log_u = np.log(u)
        powers = np.exp(np.outer(log_u, jj)) if nmax else np.zeros((s.size, 0))
        c[:, 1:] += powers * (1.0 / jj + it.k_factor * v[:, None])
    if nmax >= 1:
        c[:, 1] += s
    return c


def taylor_weights(interferers, s, nmax):
    """``(-s)^n Delta^(n)(s) / n!`` divided by ``Delta0(s)``, for ``n = 0..nmax``.

    These are the Taylor coefficients of ``Delta(s (1 - t)) / Delta(s)`` in
    ``t`` and are non-negative; they sum to ``1 / Delta0(s)`` over all ``n``.
    """
    c = scaled_log_derivatives(interferers, s, nmax)
    return kernels.exp_series_coeffs(c)


def delta_n(n, interferers, s):
    """``n``-th derivative of ``Delta0(s) = e^{-s} prod_l L_l(s)``.

    Computed with the power-series exponential recurrence (equivalent to the
    partition expansion, see :func:`delta_n_partition`) for ``s > 0``; at
    ``s = 0`` the unscaled recurrence is used.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    d0 = math.exp(float(log_delta0(interferers, s)))
    if n == 0:
        return d0
    if s > 0:
        b = taylor_weights(interferers, s, n)[0, n]
        return d0 * b * math.factorial(n) / (-s) ** n
    return (-1) ** n * math.factorial(n) * float(moment_coefficients(interferers, n)[n])


def moment_coefficients(interferers, nmax):
    """``E[W^k] / k!`` for ``k = 0..nmax``, ``W = 1 + sum of INRs``.

    These are the Taylor coefficients of ``Delta0(-t)`` i.e. of
    ``exp(sum_j (-1)^j S_j(0) t^j / j!)``.
    """
    c = np.zeros((1, nmax + 1))
    for j in range(1, nmax + 1):
        # (-1)^j S_j(0) / j! = sum_l g_l^j (1 + j K_l) / j + [j == 1]
        c[0, j] = math.fsum(it.diffuse_inr ** j * (1.0 + j * it.k_factor) / j
                            for it in interferers.members)
    if nmax >= 1:
        c[0, 1] += 1.0
    return kernels.exp_series_coeffs(c)[0]


def interference_moment(k, interferers):
    """``E[(gamma_I + gamma_J + 1)^k] = (-1)^k Delta^(k)(0)``."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    k = int(k)
    if k == 0:
        return 1.0
    return math.factorial(k) * float(moment_coefficients(interferers, k)[k])
