"""Zeros of integer-order Bessel functions by bisection on the power series.

The series is summed in extended precision (mpmath) because the alternating
terms cancel badly for arguments beyond ~20.
"""

from __future__ import annotations

from functools import lru_cache

import mpmath

_DPS = 60


def besselj_series(p: int, x: float) -> float:
    """J_p(x) from its Maclaurin series."""
    with mpmath.workdps(_DPS):
        x = mpmath.mpf(x)
        half = x / 2
        term = half ** p / mpmath.factorial(p)
        total = term
        m = 0
        while True:
            m += 1
            term = -term * half * half / (m * (m + p))
            total += term
            if abs(term) < mpmath.mpf(10) ** (-_DPS + 5) * (1 + abs(total)) and m > x:
                break
        return float(total)


def _bisect(p, a, b, fa, tol):
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = besselj_series(p, mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


@lru_cache(maxsize=None)
def bessel_zeros(p: int, upto: float, tol: float = 1e-12) -> tuple:
    """All positive zeros of J_p below ``upto``, ascending."""
    if p < 0:
        raise ValueError("order must be a nonnegative integer")
    step = 0.1
    x = max(float(p), step)
    fx = besselj_series(p, x)
    zeros = []
    while x < upto:
        nxt = min(x + step, upto)
        fn = besselj_series(p, nxt)
        if fx == 0.0:
            zeros.append(x)
        elif (fx < 0) != (fn < 0):
            zeros.append(_bisect(p, x, nxt, fx, tol))
        x, fx = nxt, fn
    return tuple(zeros)


def disk_eigenvalues(k: int, radius: float = 1.0) -> list[float]:
    """First k Dirichlet eigenvalues of the planar disk, with multiplicity."""
    if k < 1:
        raise ValueError("k must be >= 1")
    upto = 2.0 * (4.0 * k) ** 0.5 + 4.0
    while True:
        vals = []
        p = 0
        while p < upto:
            zs = bessel_zeros(p, upto)
            if not zs:
                break
            mult = 1 if p == 0 else 2
            for z in zs:
                vals.extend([z * z] * mult)
            p += 1
        vals.sort()
        # every eigenvalue below upto**2 is captured, so the first k are exact
        if len(vals) >= k and vals[k - 1] < upto ** 2:
            return [v / radius ** 2 for v in vals[:k]]
        upto *= 1.5
