"""Moments of sums, cascades and blockage-truncated direct links.

The sums over "r integers adding to k" are sums over integer *partitions*
(multisets of parts): each multiset is weighted by ``1 / prod(nu_i!)`` for its
repeated parts, which is exactly the count correction a partition needs.
Summing over ordered compositions instead would count ``{2, 1}`` twice.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
from collections.abc import Mapping

from .specfun import nuttall_q


@dataclass(frozen=True)
class PartitionSignature:
    """One partition of ``sum(parts)`` into ``len(parts)`` positive parts.

    ``parts`` is non-increasing; ``distinct`` lists ``(value, multiplicity)``
    pairs in decreasing value order; ``weight`` is
    ``1 / (prod_j parts[j]! * prod_i nu_i!)``.
    """

    parts: tuple
    distinct: tuple
    weight: float

    @property
    def total(self):
        return sum(self.parts)


def _signature(parts):
    distinct = []
    for p in parts:
        if distinct and distinct[-1][0] == p:
            distinct[-1][1] += 1
        else:
            distinct.append([p, 1])
    log_w = -sum(math.lgamma(p + 1.0) for p in parts)
    log_w -= sum(math.lgamma(nu + 1.0) for _, nu in distinct)
    return PartitionSignature(tuple(parts), tuple((v, nu) for v, nu in distinct), math.exp(log_w))


def _partitions(k, r, largest):
    if r == 0:
        if k == 0:
            yield ()
        return
    # the largest part is at least ceil(k / r) and at most min(largest, k - r + 1)
    for first in range(min(largest, k - r + 1), (k + r - 1) // r - 1, -1):
        for rest in _partitions(k - first, r - 1, first):
            yield (first, *rest)


@lru_cache(maxsize=None)
def partitions(k, r):
    """All partitions of ``k`` into exactly ``r`` positive parts, as signatures."""
    if k < 0 or r < 0:
        raise ValueError("k and r must be non-negative")
    return tuple(_signature(p) for p in _partitions(k, r, k))


def compositions(k, r):
    """Ordered tuples of ``r`` positive integers summing to ``k``."""
    if r == 0:
        if k == 0:
            yield ()
        return
    for first in range(1, k - r + 2):
        for rest in compositions(k - first, r - 1):
            yield (first, *rest)


class MomentTable(Mapping):
    """Read-only ``order -> moment`` map; half-integer orders are allowed.

    Missing orders raise :class:`KeyError` naming the order.
    """

    def __init__(self, values):
        self._values = {self._key(k): float(v) for k, v in dict(values).items()}
        for k, v in self._values.items():
            if v < 0 or math.isnan(v):
                raise ValueError(f"moment of order {k} must be non-negative, got {v}")

    @staticmethod
    def _key(order):
        twice = 2.0 * float(order)
        if not twice.is_integer() or twice < 0:
            raise ValueError(f"moment orders must be non-negative multiples of 1/2, got {order!r}")
        return int(twice) / 2.0

    def __getitem__(self, order):
        key = self._key(order)
        try:
            return self._values[key]
        except KeyError:
            raise KeyError(f"moment of order {order} missing from table") from None

    def __iter__(self):
        return iter(sorted(self._values))

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        inner = ", ".join(f"{k:g}: {v:.6g}" for k, v in self.items())
        return f"MomentTable({{{inner}}})"

    @property
    def orders(self):
        return list(self.items())


def sum_power_moment(k, count, component_moments):
    """``E[(X_1 + ... + X_count)^k]`` for IID non-negative ``X`` with given moments."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    if count < 1:
        raise ValueError("count must be positive")
    k = int(k)
    if k == 0:
        return 1.0
    mu = [None] + [component_moments[i] for i in range(1, k + 1)]
    total = []
    log_kfact = math.lgamma(k + 1.0)
    for r in range(1, min(k, count) + 1):
        falling = math.exp(log_kfact + math.lgamma(count + 1.0) - math.lgamma(count - r + 1.0))
        inner = 0.0
        for sig in partitions(k, r):
            prod = sig.weight
            for value, nu in sig.distinct:
                prod *= mu[value] ** nu
            inner += prod
        total.append(falling * inner)
    return math.fsum(total)


def cascade_moment(two_k, count, element_half_moments):
    """Moment of order ``two_k / 2`` of ``(sum_n A_n)^2`` for IID amplitudes ``A_n``.

    ``element_half_moments[i]`` must hold ``E[A^i]`` for ``i = 1..two_k``; for
    a reflected element ``A = |h_UR| |h_RD|`` so ``E[A^i]`` is the product of
    the two hops' ``i/2``-order power moments.
    """
    return sum_power_moment(int(two_k), count, element_half_moments)


def cascade_element_table(max_order, k_ur, k_rd):
    """``E[(|h_UR| |h_RD|)^i]`` for ``i = 1..max_order``."""
    from .channel import power_moment

    return MomentTable({
        i: power_moment(0.5 * i, k_ur) * power_moment(0.5 * i, k_rd)
        for i in range(0, max_order + 1)
    })


def truncated_direct_moment(k, k_ud, lambda_ud, tau, pi1, beta, scale):
    """``E[gamma^k]`` where ``gamma = scale * |g_UD|^2`` under blockage censoring.

    The direct power follows the censored density
    ``pi1 / (1 - beta) * f(x)`` on ``x > tau``, so::

        E[gamma^k] = pi1 / (1 - beta) * Q_{2k+1,0}(sqrt(2K), sqrt(2 lambda tau))
                     * (scale / (2 lambda))^k

    At ``k = 0`` this is the unblocked mass ``pi1``.  ``beta == 1`` leaves no
    unblocked mass and the result is 0.
    """
    if 2.0 * k != int(2.0 * k) or k < 0:
        raise ValueError("k must be a non-negative multiple of 1/2")
    if beta >= 1.0:
        return 0.0
    q = nuttall_q(2.0 * k + 1.0, 0, math.sqrt(2.0 * k_ud), math.sqrt(2.0 * lambda_ud * tau))
    return pi1 / (1.0 - beta) * q * (scale / (2.0 * lambda_ud)) ** k


def a2g_combined_moment(k, cas, direct):
    """``E[(sqrt(c) + sqrt(d))^{2k}]`` for independent ``c`` and ``d``.

    ``cas[j]`` and ``direct[j]`` hold ``E[c^j]`` and ``E[d^j]`` for
    ``j = 0, 1/2, ..., k``.  Both order-0 entries are ``E[X^0] = 1``: when the
    direct link is blocked ``d = 0`` and the ``i = 0`` term still carries the
    full cascade power.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    k = int(k)
    terms = [
        math.comb(2 * k, i) * cas[k - 0.5 * i] * direct[0.5 * i]
        for i in range(2 * k + 1)
    ]
    return math.fsum(terms)
