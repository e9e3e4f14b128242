"""Tail probabilities for the normal, chi-square, Student t and Kolmogorov laws.

The incomplete gamma and beta evaluations follow the usual series /
continued-fraction split (modified Lentz for the fractions), choosing the
branch that computes the smaller of P and Q directly so upper tails keep
their relative accuracy.
"""

from __future__ import annotations

import enum
import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


class TailKind(enum.Enum):
    NormalSF = "NormalSF"
    Chi2SF = "Chi2SF"
    StudentTSF = "StudentTSF"
    KolmogorovSF = "KolmogorovSF"


def _check_df(df: float) -> None:
    if not (df > 0 and math.isfinite(df)):
        raise ValueError(f"degrees of freedom must be positive and finite, got {df}")


def normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _gamma_series(a: float, x: float) -> float:
    # P(a, x) for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # Q(a, x) for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def chi2_sf(x: float, df: float) -> float:
    _check_df(df)
    if x <= 0:
        return 1.0
    return gammaincc(0.5 * df, 0.5 * x)


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    _check_df(df)
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if t == 0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * betainc(0.5 * df, 0.5, x)
    return tail if t > 0 else 1.0 - tail


def student_t_isf(p: float, df: float) -> float:
    """t such that student_t_sf(t, df) == p, by bracketed bisection."""
    _check_df(df)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -student_t_isf(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while student_t_sf(hi, df) > p:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if student_t_sf(mid, df) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kolmogorov_sf(x: float) -> float:
    """P(K > x) for the limiting Kolmogorov distribution."""
    if x <= 0:
        return 1.0
    if x < 1.0:
        # Jacobi-theta form of the CDF converges fast for small x
        w = math.pi * math.pi / (8.0 * x * x)
        cdf = 0.0
        for k in range(1, 50):
            term = math.exp(-(2 * k - 1) ** 2 * w)
            cdf += term
            if term < 1e-18 * cdf:
                break
        return 1.0 - math.sqrt(2.0 * math.pi) / x * cdf
    total = 0.0
    sign = 1.0
    for k in range(1, 100):
        term = math.exp(-2.0 * k * k * x * x)
        total += sign * term
        if term < 1e-18 * abs(total) or term == 0.0:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def tail_prob(kind: TailKind | str, *args: float) -> float:
    """Dispatch: NormalSF(x), Chi2SF(x, df), StudentTSF(t, df), KolmogorovSF(x)."""
    kind = TailKind(kind)
    if kind is TailKind.NormalSF:
        return normal_sf(*args)
    if kind is TailKind.Chi2SF:
        return chi2_sf(*args)
    if kind is TailKind.StudentTSF:
        return student_t_sf(*args)
    return kolmogorov_sf(*args)
