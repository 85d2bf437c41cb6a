"""Bessel functions of the first kind and the zeros of their derivatives.

Self-contained: ascending series for small arguments, Miller's backward
recurrence otherwise. Used as an oracle independent of the finite element
solver, so it must not call scipy.special.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError

_SERIES_LIMIT = 12.0


def _jn_series(n, x):
    half = 0.5 * x
    term = half ** n / math.factorial(n)
    total, k = term, 0
    q = -half * half
    while abs(term) > 1e-17 * max(abs(total), 1e-300) or k < 4:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if k > 500:
            break
    return total


def _jn_miller(n, x):
    # start well above max(n, x) so the neglected tail is below double precision
    top = 2 * ((max(n, int(x)) + 30 + int(math.sqrt(40 * max(n, x)))) // 2)
    j_next, j_cur = 0.0, 1e-300
    norm, want = 0.0, 0.0
    for k in range(top, 0, -1):
        j_prev = 2 * k / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
            want *= 1e-250
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j_cur
        if k - 1 == n:
            want = j_cur
    norm += j_cur  # J_0 term of  J_0 + 2 sum J_2k = 1
    return want / norm


def jn(n, x):
    """J_n(x) for integer ``n`` and real ``x`` (scalar or array)."""
    n = int(n)
    if n < 0:
        return (-1) ** n * jn(-n, x)
    arr = np.asarray(x, dtype=float)
    flat = arr.ravel()
    out = np.empty_like(flat)
    for i, xi in enumerate(flat):
        sgn = 1.0
        if xi < 0:
            xi, sgn = -xi, (-1.0) ** n
        if xi == 0:
            out[i] = 1.0 if n == 0 else 0.0
        elif xi <= _SERIES_LIMIT:
            out[i] = sgn * _jn_series(n, xi)
        else:
            out[i] = sgn * _jn_miller(n, xi)
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def jn_prime(n, x):
    if n == 0:
        return -np.asarray(jn(1, x)) if np.ndim(x) else -jn(1, x)
    return 0.5 * (np.asarray(jn(n - 1, x)) - np.asarray(jn(n + 1, x)))


def jn_second(n, x):
    """Second derivative by the recurrence (J_{n-2} - 2 J_n + J_{n+2}) / 4."""
    return 0.25 * (np.asarray(jn(n - 2, x)) - 2 * np.asarray(jn(n, x)) + np.asarray(jn(n + 2, x)))


def _bisect(f, a, b, tol=1e-14, maxiter=200):
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise NumericError("root not bracketed")
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or b - a < tol * max(1.0, abs(m)):
            return m
        if fa * fm < 0:
            b = m
        else:
            a, fa = m, fm
    raise NumericError("bisection did not converge")


def jn_prime_zeros(n, count, step=math.pi / 8):
    """First ``count`` positive zeros of J_n' by bracketing and bisection.

    The zero of J_0' at the origin is excluded. Consecutive zeros are spaced
    by roughly pi, so a pi/8 grid cannot skip any.
    """
    f = lambda x: float(jn_prime(n, x))  # noqa: E731
    roots, a = [], 0.5
    fa = f(a)
    while len(roots) < count:
        b = a + step
        fb = f(b)
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(f, a, b))
        a, fa = b, fb
        if a > 10 * (n + count + 10) * math.pi:
            raise NumericError(f"could not bracket zeros of J_{n}'")
    return roots[:count]


def jn_zeros(n, count, step=math.pi / 8):
    """First ``count`` positive zeros of J_n."""
    f = lambda x: float(jn(n, x))  # noqa: E731
    roots, a = [], 0.5
    fa = f(a)
    while len(roots) < count:
        b = a + step
        fb = f(b)
        if fa * fb < 0:
            roots.append(_bisect(f, a, b))
        a, fa = b, fb
    return roots
