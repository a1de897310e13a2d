import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhahn.hopping import ModelParams, phi, random_params
from qhahn.normal_order import (
    NormalForm,
    Reducer,
    binomial_check,
    coeff_a,
    expand_skew_binomial,
    is_normal,
    partial_sum_s,
    phi_recursive,
    reduce_word,
)

P = ModelParams(F(3, 10), F(7, 10), F(1, 2))


def _eval_word(word, a, b):
    out = np.eye(a.shape[0], dtype=object)
    for ch in word:
        out = out.dot(a if ch == "A" else b)
    return out


def _matrix_rep(params, s=F(3)):
    """Upper-triangular 2x2 pair satisfying B A = alpha A A + beta A B + gamma B B.

    The diagonals carry the two one-dimensional characters A -> 1, B -> t with
    t in {1, nu}; the off-diagonal entries solve the remaining linear equation.
    """
    al, be, ga, nu = params.alpha, params.beta, params.gamma, params.nu
    y = F(1)
    # (0,1) entry: x (1 - al - al s - be nu s) + y (s - be - ga - ga nu s) = 0;
    # the x coefficient is (1 - nu)(1 - s nu)/(1 - q nu), nonzero for s nu != 1
    x = -y * (s - be - ga - ga * nu * s) / (1 - al - al * s - be * nu * s)
    A = np.array([[F(1), x], [F(0), s]], dtype=object)
    B = np.array([[F(1), y], [F(0), nu * s]], dtype=object)
    return A, B


def test_relation_in_matrix_representation():
    A, B = _matrix_rep(P)
    al, be, ga = P.alpha, P.beta, P.gamma
    assert (B.dot(A) == al * A.dot(A) + be * A.dot(B) + ga * B.dot(B)).all()


def test_reduction_agrees_with_representation():
    # an independent model of the algebra: any word and its normal form act the same
    A, B = _matrix_rep(P)
    rng = random.Random(3)
    for _ in range(40):
        word = "".join(rng.choice("AB") for _ in range(rng.randint(1, 9)))
        nf = reduce_word(word, P)
        lhs = _eval_word(word, A, B)
        rhs = sum(c * _eval_word(w, A, B) for w, c in nf.terms().items())
        assert (lhs == rhs).all(), word


def test_normal_words_fixed():
    for word in ["", "A", "B", "AAB", "ABBB"]:
        assert is_normal(word)
        nf = reduce_word(word, P)
        assert nf.terms() == ({word: 1} if word else {"": 1})


def test_simple_rewrite():
    nf = reduce_word("BA", P)
    assert nf.terms() == {"AA": P.alpha, "AB": P.beta, "BB": P.gamma}


def test_coefficients_sum_to_one():
    # alpha + beta + gamma = 1 makes the all-ones evaluation a character
    rng = random.Random(5)
    for _ in range(20):
        word = "".join(rng.choice("AB") for _ in range(rng.randint(1, 10)))
        assert reduce_word(word, P).total() == 1


def test_confluence():
    rng = random.Random(11)
    for _ in range(30):
        word = "".join(rng.choice("AB") for _ in range(rng.randint(0, 10)))
        assert reduce_word(word, P, "leftmost") == reduce_word(word, P, "rightmost")


def test_exact_only():
    with pytest.raises(TypeError):
        Reducer(ModelParams(0.3, 0.7, 0.5))


def test_quantum_binomial_fixed_params():
    for n in range(9):
        nf = expand_skew_binomial(n, P)
        assert list(nf.coeffs) == [phi(m, n, P) for m in range(n + 1)]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_quantum_binomial_random(seed):
    assert binomial_check(6, random_params(np.random.default_rng(seed)))["pass"]


def test_ladder_three_ways():
    for l in range(1, 8):
        for k in range(l + 1):
            a = coeff_a(k, l, P, "rewrite")
            assert a == coeff_a(k, l, P, "recursion") == coeff_a(k, l, P, "closed")


def test_partial_sums():
    for n in range(1, 10):
        for k in range(n):
            assert partial_sum_s(n, k, P, "direct") == partial_sum_s(n, k, P, "closed")


def test_phi_recursion():
    for n in range(8):
        for m in range(n + 1):
            assert phi_recursive(m, n, P) == phi(m, n, P)


def test_normal_form_helpers():
    nf = NormalForm(2, (F(1, 2), F(0), F(1, 2)))
    assert nf[5] == 0
    assert nf.terms() == {"BB": F(1, 2), "AA": F(1, 2)}
    assert "AA" in str(nf)
