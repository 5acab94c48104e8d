"""Cylindrical Bessel functions of the first kind, J_n(x), for integer order.

Small arguments use the ascending power series; larger arguments use Miller's
backward recurrence normalised with the Neumann sum
``1 = J_0 + 2 * sum_k J_2k``.  Everything is vectorised over ``x``.
"""
from __future__ import annotations

import math

import numpy as np

MAX_ORDER = 32
MAX_ARG = 50.0
# Cancellation in the series grows like I_0(x) * eps; 8 keeps it near 1e-13.
SERIES_LIMIT = 8.0
_SERIES_TERMS = 60
_RESCALE = 1e250


def _check(n: int, x: np.ndarray) -> None:
    if int(n) != n:
        raise TypeError(f"Bessel order must be an integer, got {n!r}")
    if abs(n) > MAX_ORDER:
        raise ValueError(f"|n| must be <= {MAX_ORDER}, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("Bessel argument must be finite")


def _series(n: int, x: np.ndarray) -> np.ndarray:
    # n >= 0, any x; only used where |x| <= SERIES_LIMIT
    half = 0.5 * x
    q = -half * half
    term = half**n / math.factorial(n)
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + n))
        total += term
    return total


def _miller_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """J_0..J_nmax at x > 0 via backward recurrence; returns shape (nmax+1, len(x))."""
    xmax = float(np.max(x))
    start = max(nmax, int(xmax)) + 40
    start += start % 2
    out = np.zeros((nmax + 1, x.size))
    inv = 2.0 / x
    j_hi = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        j_lo = k * inv * j - j_hi
        j_hi, j = j, j_lo
        # j now holds the unnormalised J_{k-1}
        m = k - 1
        if m <= nmax:
            out[m] = j
        if m % 2 == 0 and m > 0:
            norm += 2.0 * j
        big = np.abs(j) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j *= s
            j_hi *= s
            norm *= s
            out[:, big] *= 1.0 / _RESCALE
    norm += j  # J_0 term
    return out / norm


def bessel_table(nmax: int, x) -> np.ndarray:
    """Return J_0(x) .. J_nmax(x) stacked along a new leading axis."""
    x = np.asarray(x, dtype=float)
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    if not np.all(np.isfinite(x)):
        raise ValueError("Bessel argument must be finite")
    flat = x.ravel()
    sign = np.where(flat < 0, -1.0, 1.0)
    ax = np.abs(flat)
    out = np.empty((nmax + 1, flat.size))
    small = ax <= SERIES_LIMIT
    if np.any(small):
        xs = ax[small]
        for m in range(nmax + 1):
            out[m, small] = _series(m, xs)
    if np.any(~small):
        out[:, ~small] = _miller_table(nmax, ax[~small])
    # J_m(-x) = (-1)^m J_m(x)
    odd = np.arange(nmax + 1)[:, None] % 2 == 1
    out = np.where(odd, out * sign[None, :], out)
    return out.reshape((nmax + 1,) + x.shape)


def _jn(n: int, x: np.ndarray) -> np.ndarray:
    val = bessel_table(abs(n), x)[abs(n)]
    if n < 0 and n % 2:
        val = -val
    return val


def bessel_j(n: int, x):
    """J_n(x) for integer ``n`` (negative orders by reflection).

    Absolute error is below 1e-12 for ``|x| <= 50``.  Returns a float for
    scalar input and an array otherwise.
    """
    xa = np.asarray(x, dtype=float)
    _check(n, xa)
    val = _jn(n, xa)
    return float(val) if np.ndim(x) == 0 else val


def bessel_j_prime(n: int, x):
    """Derivative J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2."""
    xa = np.asarray(x, dtype=float)
    _check(n, xa)
    val = 0.5 * (_jn(n - 1, xa) - _jn(n + 1, xa))
    return float(val) if np.ndim(x) == 0 else val


def bessel_j_second(n: int, x):
    """Second derivative via the recurrence, (J_{n-2} - 2 J_n + J_{n+2}) / 4."""
    xa = np.asarray(x, dtype=float)
    _check(n, xa)
    val = 0.25 * (_jn(n - 2, xa) - 2.0 * _jn(n, xa) + _jn(n + 2, xa))
    return float(val) if np.ndim(x) == 0 else val
