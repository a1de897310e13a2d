from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from qhahn.qcalc import exact, is_exact, isclose, q_binomial, q_factorial, q_number, q_pochhammer

fractions = st.fractions(min_value=-Fraction(9, 10), max_value=Fraction(9, 10), max_denominator=30)


def test_pochhammer_branches():
    a, q = Fraction(2, 7), Fraction(1, 3)
    assert q_pochhammer(a, q, 0) == 1
    assert q_pochhammer(0, q, 5) == 1
    assert q_pochhammer(q, q, 2) == (1 - q) * (1 - q**2)
    assert q_pochhammer(a, q, -1) == 1 / (1 - a / q)


def test_pochhammer_negative_pole():
    q = Fraction(1, 2)
    with pytest.raises(ZeroDivisionError):
        q_pochhammer(q**2, q, -3)


@given(a=fractions, q=fractions.filter(lambda v: v != 0), n=st.integers(-10, 10))
@settings(max_examples=200, deadline=None)
def test_pochhammer_step(a, q, n):
    try:
        lhs = q_pochhammer(a, q, n + 1)
        rhs = q_pochhammer(a, q, n) * (1 - a * q**n)
    except ZeroDivisionError:
        return
    assert lhs == rhs


def test_q_number_values():
    assert q_number(3, Fraction(1, 2)) == Fraction(7, 4)
    assert q_number(5, 1) == 5
    assert q_number(0, Fraction(3, 5)) == 0


def test_q_binomial_small():
    q = Fraction(2, 9)
    assert q_binomial(2, 1, q) == 1 + q
    assert q_binomial(4, 4, q) == 1
    assert q_binomial(4, 5, q) == 0
    assert q_binomial(4, -1, q) == 0


def test_q_binomial_polynomial_coefficients():
    # Gaussian binomials count subsets by inversions: coefficients of q^k are
    # the number of 0/1 words with m ones and k inversions
    import itertools

    n, m = 6, 3
    counts = {}
    for ones in itertools.combinations(range(n), m):
        inv = sum(1 for i in ones for j in range(n) if j not in ones and j < i)
        counts[inv] = counts.get(inv, 0) + 1
    q = Fraction(3, 11)
    assert q_binomial(n, m, q) == sum(c * q**k for k, c in counts.items())


@given(n=st.integers(0, 20), q=fractions)
@settings(max_examples=100, deadline=None)
def test_q_binomial_symmetry_and_pascal(n, q):
    for m in range(n + 1):
        assert q_binomial(n, m, q) == q_binomial(n, n - m, q)
        if n:
            assert q_binomial(n, m, q) == q_binomial(n - 1, m - 1, q) + q**m * q_binomial(n - 1, m, q)


def test_q_one_limits():
    for n in range(8):
        for m in range(n + 1):
            assert q_binomial(n, m, 1) == comb(n, m)
    assert q_factorial(5, 1) == 120
    near = 1 - 1e-9
    assert isclose(q_binomial(7, 3, near), 35, tol=1e-6)


def test_float_backend_matches_exact():
    q = Fraction(3, 7)
    for n in range(10):
        for m in range(n + 1):
            assert isclose(q_binomial(n, m, float(q)), float(q_binomial(n, m, q)))


def test_exact_conversion():
    assert exact("0.1") == Fraction(1, 10)
    assert exact("3/7") == Fraction(3, 7)
    assert exact(0.5) == Fraction(1, 2)
    assert is_exact(1, Fraction(1, 2))
    assert not is_exact(0.5)
    with pytest.raises(ValueError):
        exact(1 + 2j)
