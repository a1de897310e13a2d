from fractions import Fraction as F
from math import comb

import numpy as np
import pytest

from qhahn.hopping import ModelParams, phi
from qhahn.state_space import (
    StateSpaceTooLarge,
    WindowTooSmall,
    build_markov_matrix,
    build_window_matrix,
    check_conjugation,
    check_translation,
    coords_to_occupation,
    enumerate_configs,
    occupation_to_coords,
    propagate,
    stationary_vector,
)

P = ModelParams(F(3, 10), F(7, 10), F(1, 2))


def test_enumeration():
    configs = enumerate_configs(3, 2)
    assert configs == [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
    for L, N in [(1, 4), (4, 3), (5, 2)]:
        assert len(enumerate_configs(L, N)) == comb(L + N - 1, N)


def test_cap(monkeypatch):
    monkeypatch.setenv("QHAHN_MAX_STATES", "10")
    with pytest.raises(StateSpaceTooLarge):
        enumerate_configs(4, 3)


def test_coordinate_forms():
    occ = (2, 0, 1, 3)
    x = occupation_to_coords(occ)
    assert x == (0, 0, 2, 3, 3, 3)
    assert coords_to_occupation(x, 4) == occ
    with pytest.raises(ValueError):
        coords_to_occupation((5,), 4)


def _brute_force_matrix(L, N, params):
    # independent construction: enumerate all outflow vectors per source and
    # accumulate into a dense table keyed by target occupation
    configs = enumerate_configs(L, N)
    idx = {c: i for i, c in enumerate(configs)}
    dense = [[F(0)] * len(configs) for _ in configs]
    for j, c in enumerate(configs):
        stack = [((), F(1))]
        for i in range(L):
            stack = [(f + (m,), w * phi(m, c[i], params)) for f, w in stack for m in range(c[i] + 1)]
        for flows, w in stack:
            tgt = tuple(c[i] - flows[i] + flows[i - 1] for i in range(L))
            dense[idx[tgt]][j] += w
    return dense


def test_matrix_against_brute_force():
    for L, N in [(2, 2), (3, 3), (4, 2)]:
        M = build_markov_matrix(L, N, P)
        assert M.to_dense() == _brute_force_matrix(L, N, P)


def test_multiple_flows_summed():
    # on a fully occupied ring a uniform extra flow round the ring lands on
    # the same target, so these entries collect several flow vectors
    M = build_markov_matrix(2, 2, P)
    diag = M.flow_diagnostic()
    assert diag["max_multiplicity"] > 1
    assert all(s == 1 for s in M.column_sums())


def test_stochastic_and_stationary():
    for L, N in [(1, 3), (3, 2), (4, 3), (5, 2)]:
        M = build_markov_matrix(L, N, P)
        p_st = stationary_vector(L, N, P, M.configs)
        assert all(s == 1 for s in M.column_sums())
        assert M.matvec(p_st) == p_st
        assert sum(p_st) == 1


def test_conjugation_and_translation():
    for L, N in [(3, 2), (4, 2), (3, 3)]:
        M = build_markov_matrix(L, N, P)
        assert check_conjugation(M, stationary_vector(L, N, P, M.configs))
        assert check_translation(M)


def test_float_matrix_matches_exact():
    Me = build_markov_matrix(3, 2, P).to_float_array()
    Mf = build_markov_matrix(3, 2, P.as_float()).to_float_array()
    assert np.allclose(Me, Mf, atol=1e-14)


def test_window_propagation():
    dist = propagate((0,), 3, P)
    assert sum(dist.values()) == 1
    # one walker: binomial(3, p) displacement
    for k in range(4):
        assert dist[(k,)] == comb(3, k) * P.p**k * (1 - P.p) ** (3 - k)
    with pytest.raises(WindowTooSmall):
        propagate((0, 1), 3, P, window=(0, 2))


def test_window_matrix_freezes_last_site():
    M = build_window_matrix((0, 2), 2, P)
    frozen = M.index[(0, 0, 2)]
    assert M[frozen, frozen] == 1
