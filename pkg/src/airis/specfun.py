"""Scalar special functions used by the closed-form link statistics.

Everything here works on Python floats with the :mod:`math` module only.
The routines favour positive-term series (Poisson mixtures, Kummer
transformations) so that sums never cancel, and keep exponent-heavy
products in the log domain until the final ``exp``.
"""

import math

__all__ = [
    "bessel_i",
    "log_bessel_i",
    "lower_incomplete_gamma",
    "regularized_gamma_p",
    "regularized_gamma_q",
    "marcum_q1",
    "marcum_p1",
    "nuttall_q",
    "nuttall_q_recursive",
    "nuttall_q_quadrature",
    "kummer_m",
    "laguerre",
]

_EPS = 1e-17
_MAX_TERMS = 100_000
_ASYMPTOTIC_X = 30.0


def _check_nonneg(name, value):
    if not value >= 0.0:
        raise ValueError(f"{name} must be non-negative, got {value!r}")


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind
# ---------------------------------------------------------------------------

def _log_bessel_series(order, x):
    # log of sum_k (x/2)^(2k+n) / (k! (k+n)!), summed relative to the peak term
    half = 0.5 * x
    log_half = math.log(half)
    log_terms = []
    k = 0
    log_t = order * log_half - math.lgamma(order + 1.0)
    peak = log_t
    while True:
        log_terms.append(log_t)
        if log_t > peak:
            peak = log_t
        k += 1
        log_t += 2.0 * log_half - math.log(k) - math.log(k + order)
        if log_t < peak + math.log(_EPS) and k > half:
            break
        if k > _MAX_TERMS:
            raise ArithmeticError("Bessel series failed to converge")
    return peak + math.log(math.fsum(math.exp(t - peak) for t in log_terms))


def _log_bessel_asymptotic(order, x):
    # Hankel expansion of e^{-x} sqrt(2 pi x) I_n(x); stop at the smallest term
    mu = 4.0 * order * order
    total = 1.0
    term = 1.0
    k = 1
    while k < 200:
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term):
            break
        total += nxt
        term = nxt
        if abs(term) < _EPS * abs(total):
            break
        k += 1
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)


def log_bessel_i(order, x):
    """Natural log of the modified Bessel function ``I_order(x)``.

    Returns ``-inf`` where ``I_order(x) == 0`` (``x == 0`` with ``order > 0``).
    """
    _check_nonneg("x", x)
    if order < 0 or int(order) != order:
        raise ValueError(f"order must be a non-negative integer, got {order!r}")
    order = int(order)
    if x == 0.0:
        return 0.0 if order == 0 else -math.inf
    if x > _ASYMPTOTIC_X + order * order:
        return _log_bessel_asymptotic(order, x)
    return _log_bessel_series(order, x)


def bessel_i(order, x):
    """Modified Bessel function of the first kind ``I_order(x)`` for ``x >= 0``."""
    return math.exp(log_bessel_i(order, x))


# ---------------------------------------------------------------------------
# Incomplete gamma
# ---------------------------------------------------------------------------

def _gamma_series(a, x):
    # P(a, x) by the power series, valid for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series failed to converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * total


def _gamma_continued_fraction(a, x):
    # Q(a, x) by the modified Lentz continued fraction, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction failed")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_p(a, x):
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``."""
    if not a > 0.0:
        raise ValueError(f"a must be positive, got {a!r}")
    _check_nonneg("x", x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_continued_fraction(a, x)


def regularized_gamma_q(a, x):
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if not a > 0.0:
        raise ValueError(f"a must be positive, got {a!r}")
    _check_nonneg("x", x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_continued_fraction(a, x)


def lower_incomplete_gamma(a, x):
    """Lower incomplete gamma function ``gamma(a, x)``."""
    return regularized_gamma_p(a, x) * math.gamma(a)


# ---------------------------------------------------------------------------
# Marcum Q and Nuttall Q
# ---------------------------------------------------------------------------

def _poisson_log_weights(mean):
    """Yield ``(j, log pmf)`` of Poisson(mean) for j = 0, 1, 2, ... without end."""
    if mean == 0.0:
        yield 0, 0.0
        return
    log_mean = math.log(mean)
    j = 0
    while j < _MAX_TERMS:
        yield j, -mean + j * log_mean - math.lgamma(j + 1.0)
        j += 1
    raise ArithmeticError("Poisson mixture failed to converge")


def _mixture_sum(mean, y, term):
    """Sum ``term(j, log_w)`` over Poisson(mean) weights until the tail is negligible.

    Terms can grow while ``j < sqrt(2 mean y)`` (the incomplete-gamma factor rises
    faster than the weight falls), so truncation waits for both the Poisson mode
    and that crossover before comparing against the running total.
    """
    start = max(mean, math.sqrt(2.0 * mean * y)) + 2.0
    terms = []
    for j, log_w in _poisson_log_weights(mean):
        t = term(j, log_w)
        terms.append(t)
        if j > start and (t == 0.0 or t < 1e-18 * math.fsum(terms)):
            if t == 0.0 and math.fsum(terms) == 0.0 and j < start + 50:
                continue
            break
    return math.fsum(terms)


def _marcum_split(a, b):
    # Q1 is the survival of a noncentral chi-square with 2 dof:
    # a Poisson(a^2/2) mixture of Gamma(j+1, 1) tails evaluated at b^2/2.
    # Both Q and 1-Q are accumulated as positive sums; return the pair.
    mean = 0.5 * a * a
    y = 0.5 * b * b
    upper = _mixture_sum(mean, y, lambda j, lw: math.exp(lw) * regularized_gamma_q(j + 1.0, y))
    lower = _mixture_sum(mean, y, lambda j, lw: math.exp(lw) * regularized_gamma_p(j + 1.0, y))
    return upper, lower


def marcum_q1(a, b):
    """First-order Marcum Q function ``Q_1(a, b)``."""
    _check_nonneg("a", a)
    _check_nonneg("b", b)
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return math.exp(-0.5 * b * b)
    q, p = _marcum_split(a, b)
    return q if q <= 0.5 else 1.0 - p


def marcum_p1(a, b):
    """Complement ``1 - Q_1(a, b)`` without cancellation for small values."""
    _check_nonneg("a", a)
    _check_nonneg("b", b)
    if b == 0.0:
        return 0.0
    if a == 0.0:
        return -math.expm1(-0.5 * b * b)
    q, p = _marcum_split(a, b)
    return p if p <= 0.5 else 1.0 - q


def nuttall_q(m, n, a, b):
    """Unnormalized Nuttall Q function.

    ``Q_{m,n}(a, b) = int_b^inf x^m exp(-(x^2 + a^2)/2) I_n(a x) dx``

    Evaluated by expanding ``I_n`` termwise, which turns the integral into a
    Poisson(a^2/2)-weighted sum of upper incomplete gamma functions.  ``m`` may
    be any real number with ``m + n > -1``; the outage formulas only need ``n = 0``.
    """
    _check_nonneg("a", a)
    _check_nonneg("b", b)
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    if not m + n > -1:
        raise ValueError(f"m + n must exceed -1, got m={m!r}, n={n!r}")
    n = int(n)
    if a == 0.0 and n > 0:
        return 0.0
    y = 0.5 * b * b
    mean = 0.5 * a * a
    log2 = math.log(2.0)
    log_a = math.log(a) if a > 0.0 else 0.0
    # term j = w_j (a/2)^n 2^{(m+n-1)/2} Gamma(s_j)/(j+n)! Q(s_j, y), w_j Poisson weights
    log_const = n * (log_a - log2) + 0.5 * (m + n - 1.0) * log2

    def term(j, log_w):
        s = 0.5 * (m + n + 1.0) + j
        q = regularized_gamma_q(s, y)
        if q == 0.0:
            return 0.0
        return math.exp(log_w + log_const + math.lgamma(s) - math.lgamma(j + n + 1.0)) * q

    return _mixture_sum(mean, y, term)


def nuttall_q_recursive(m, a, b):
    """``Q_{m,0}(a, b)`` for integer ``m >= 0`` by upward recursion.

    Integration by parts couples the orders ``(m, 0)`` and ``(m, 1)``::

        Q_{m,0} = b^{m-1} e^{-(a^2+b^2)/2} I_0(ab) + (m-1) Q_{m-2,0} + a Q_{m-1,1}
        Q_{m,1} = b^{m-1} e^{-(a^2+b^2)/2} I_1(ab) + (m-2) Q_{m-2,1} + a Q_{m-1,0}

    The odd chain starts from ``Q_{1,0}`` (Marcum Q) and ``Q_{0,1}`` (whose
    coefficient vanishes).  The even chain needs ``Q_{0,0}`` and ``Q_{1,1}``,
    which have no elementary form and are taken from the series.
    """
    _check_nonneg("a", a)
    _check_nonneg("b", b)
    if m < 0 or int(m) != m:
        raise ValueError(f"m must be a non-negative integer, got {m!r}")
    m = int(m)
    log_env = -0.5 * (a * a + b * b)

    def boundary(k, order):
        # b^k e^{-(a^2+b^2)/2} I_order(ab)
        if b == 0.0:
            return math.exp(log_env) if (k == 0 and order == 0) else 0.0
        log_i = log_bessel_i(order, a * b)
        if log_i == -math.inf:
            return 0.0
        return math.exp(k * math.log(b) + log_env + log_i)

    q0 = {}
    q1 = {}
    if m % 2 == 1:
        q0[1] = marcum_q1(a, b)
        q1[0] = 0.0  # multiplied by zero in the recursion
    else:
        q0[0] = nuttall_q(0, 0, a, b)
        q1[1] = nuttall_q(1, 1, a, b)
    for k in range(2, m + 1):
        if (k - m) % 2 == 0:
            q0[k] = boundary(k - 1, 0) + (k - 1) * q0[k - 2] + a * q1[k - 1]
        else:
            q1[k] = boundary(k - 1, 1) + (k - 2) * q1[k - 2] + a * q0[k - 1]
    return q0[m]


def nuttall_q_quadrature(m, n, a, b):
    """``Q_{m,n}(a, b)`` by adaptive quadrature with a bounded tail.

    The integrand is evaluated with the exponentially scaled Bessel function
    so that ``e^{-(x-a)^2/2}`` governs the decay; the upper limit is placed
    where the remaining tail is below 1e-17 relative to the Gaussian bound.
    """
    from scipy import integrate, special

    def integrand(x):
        if x == 0.0:
            return 0.0 if m > 0 else math.exp(-0.5 * a * a) * (1.0 if n == 0 else 0.0)
        return x ** m * math.exp(-0.5 * (x - a) ** 2) * special.ive(n, a * x)

    upper = max(a, b) + 12.0 + math.sqrt(2.0 * max(m, 1) * math.log(max(a, b) + 12.0) + 80.0)
    lo = b
    pieces = []
    # split at the peak of the integrand so quad sees a smooth, unimodal piece
    peak = 0.5 * (a + math.sqrt(a * a + 4.0 * max(m, 0)))
    breaks = sorted({lo, *(p for p in (peak - 6.0, peak, peak + 6.0) if lo < p < upper), upper})
    for left, right in zip(breaks[:-1], breaks[1:]):
        value, _ = integrate.quad(integrand, left, right, epsabs=0.0, epsrel=1e-13, limit=400)
        pieces.append(value)
    return math.fsum(pieces)


# ---------------------------------------------------------------------------
# Confluent hypergeometric function and Laguerre functions
# ---------------------------------------------------------------------------

def _kummer_series(a, b, z):
    terms = [1.0]
    term = 1.0
    k = 0
    while True:
        term *= (a + k) / (b + k) * z / (k + 1)
        k += 1
        terms.append(term)
        if term == 0.0:
            break
        if abs(term) < _EPS * abs(math.fsum(terms[-8:])) and k > abs(z):
            break
        if k > _MAX_TERMS:
            raise ArithmeticError("Kummer series failed to converge")
    return math.fsum(terms)


def kummer_m(a, b, z):
    """Confluent hypergeometric function ``1F1(a; b; z)``.

    For ``z < 0`` Kummer's transformation ``M(a,b,z) = e^z M(b-a, b, -z)`` is
    applied first so the summed series has no alternating cancellation when
    ``b - a > 0``.
    """
    if b <= 0.0 and int(b) == b:
        raise ValueError(f"b must not be a non-positive integer, got {b!r}")
    if z == 0.0 or a == 0.0:
        return 1.0
    if a < 0 and int(a) == a:
        # terminating polynomial: sum directly, no transformation needed
        return _kummer_series(a, b, z)
    if z < 0.0:
        return math.exp(z) * _kummer_series(b - a, b, -z)
    return _kummer_series(a, b, z)


def _laguerre_recurrence(n, x):
    if n == 0:
        return 1.0
    prev, cur = 1.0, 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur


def laguerre(order, x):
    """Laguerre function ``L_order(x) = M(-order, 1, x)`` for real ``order >= 0``.

    Non-positive arguments (the only ones the moment formulas need, ``x = -K``)
    go through the transformed Kummer series, whose terms are all positive.
    For ``x > 0`` integer orders use the three-term recurrence, which is stable
    where the terminating series would cancel badly.
    """
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order!r}")
    if order == 0:
        return 1.0
    is_int = float(order).is_integer()
    if x > 0.0 and is_int:
        return _laguerre_recurrence(int(order), x)
    if x <= 0.0:
        return math.exp(x) * _kummer_series(1.0 + order, 1.0, -x)
    return _kummer_series(-order, 1.0, x)
