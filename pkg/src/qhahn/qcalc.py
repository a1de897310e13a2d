"""q-series primitives shared by the rest of the package.

Every function here is written against the ordinary Python number protocol,
so the same code runs over two scalar backends:

* exact: :class:`fractions.Fraction` (no rounding, used for identities);
* floating: ``float``/``complex`` (used for root finding and simulation).

Use :func:`exact` to lift user input (``"3/7"``, ``"0.25"``, ints, floats)
into the exact backend and :func:`isclose` for tolerance-based comparisons
in the floating one.
"""
from __future__ import annotations

import cmath
from fractions import Fraction
from math import comb
from numbers import Number

Scalar = Number

__all__ = [
    "Scalar",
    "exact",
    "is_exact",
    "isclose",
    "q_pochhammer",
    "q_number",
    "q_factorial",
    "q_binomial",
]


def exact(value) -> Fraction:
    """Convert ``value`` to an exact rational.

    Strings are parsed as fractions (``"2/5"``) or decimals (``"0.4"``);
    a decimal string is read literally, so ``exact("0.1") == Fraction(1, 10)``.
    Floats convert to the rational they actually encode.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, complex):
        if value.imag != 0:
            raise ValueError(f"cannot represent complex {value!r} exactly")
        value = value.real
    return Fraction(value)


def is_exact(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def isclose(a, b, tol: float = 1e-12) -> bool:
    """Absolute-or-relative closeness for the floating backend."""
    return cmath.isclose(complex(a), complex(b), rel_tol=tol, abs_tol=tol)


def _lift(x):
    # int / int would drop to float; promote plain ints to the exact backend
    return Fraction(x) if isinstance(x, int) else x


def _one_like(a, q):
    # keeps the backend of the inputs: Fraction stays Fraction, float stays float
    return 1 + 0 * a + 0 * q


def q_pochhammer(a, q, n: int):
    """(a; q)_n including the negative-index branch.

    ``n > 0``: prod_{k=0}^{n-1} (1 - a q^k);  ``n = 0``: 1;
    ``n < 0``: prod_{k=1}^{|n|} (1 - a q^{-k})^{-1}.

    Raises ZeroDivisionError if a factor of the negative branch vanishes.
    """
    a, q = _lift(a), _lift(q)
    result = _one_like(a, q)
    if n >= 0:
        for k in range(n):
            result *= 1 - a * q**k
        return result
    for k in range(1, -n + 1):
        factor = 1 - a / q**k
        if factor == 0:
            raise ZeroDivisionError(f"(a;q)_{n} is singular: a = q^{k}")
        result /= factor
    return result


def q_number(n: int, q):
    """[n] = (1 - q^n)/(1 - q), with the limit value n at q = 1."""
    q = _lift(q)
    if q == 1:
        return n * _one_like(q, q)
    return (1 - q**n) / (1 - q)


def q_factorial(n: int, q):
    result = _one_like(q, q)
    for k in range(1, n + 1):
        result *= q_number(k, q)
    return result


def q_binomial(n: int, m: int, q):
    """Gaussian binomial coefficient; zero when m is outside [0, n].

    Evaluated as a product of q-number ratios, which is exact at q = 1
    (ordinary binomial) and avoids (q;q)_n / (q;q)_m cancellations.
    """
    q = _lift(q)
    if m < 0 or m > n:
        return 0 * _one_like(q, q)
    if q == 1:
        return comb(n, m) * _one_like(q, q)
    m = min(m, n - m)
    result = _one_like(q, q)
    for k in range(1, m + 1):
        result *= (1 - q ** (n - m + k)) / (1 - q**k)
    return result
