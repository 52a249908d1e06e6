"""Modified Bessel function of the second kind, order zero.

Two branches, split at ``x = 2``:

* ``x <= 2``: ascending series
  ``K0(x) = -(ln(x/2) + gamma) I0(x) + sum_k (x^2/4)^k / (k!)^2 H_k``;
* ``x > 2``: Steed's continued fraction for the ratio ``K1/K0``, run to
  machine precision, which yields ``K0`` directly.

A plain asymptotic expansion is not used for ``x > 2`` because its smallest
term near ``x = 2`` is about ``1e-5`` of the value, far from the ``1e-9``
target.
"""
from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.5772156649015329
_EPS = 1e-16
_MAX_TERMS = 10000


def _k0_series(x: float) -> float:
    y = x * x / 4.0
    term = 1.0
    harmonic = 0.0
    i0 = 1.0
    tail = 0.0
    k = 0
    while True:
        k += 1
        term *= y / (k * k)
        harmonic += 1.0 / k
        i0 += term
        tail += term * harmonic
        if term * max(harmonic, 1.0) < _EPS * abs(tail + 1.0) or k > _MAX_TERMS:
            break
    return -(math.log(x / 2.0) + EULER_GAMMA) * i0 + tail


def _k0_continued_fraction(x: float) -> float:
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_TERMS):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise ArithmeticError("K0 continued fraction did not converge")
    return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s


def k0(x: float) -> float:
    """Scalar ``K0(x)`` for ``x > 0``; ``inf`` at 0."""
    if x < 0 or math.isnan(x):
        raise ValueError("K0 is defined for x >= 0")
    if x == 0:
        return math.inf
    if x <= 2.0:
        return _k0_series(x)
    if x > 700:
        return 0.0
    return _k0_continued_fraction(x)


def bessel_k0(x):
    """Vectorised :func:`k0`."""
    arr = np.asarray(x, dtype=float)
    out = np.vectorize(k0, otypes=[float])(arr)
    return out if arr.ndim else float(out)
