import itertools
from fractions import Fraction as F
from math import comb

import pytest

from qhahn.green import (
    completeness_check,
    completeness_rhs,
    completeness_json,
    green_csv,
    green_function,
    green_table,
    quadrature,
    reachable,
)
from qhahn.hopping import ModelParams, ParameterError
from qhahn.state_space import propagate

P = ModelParams(F(1, 2), F(2, 5), F(1, 5))


def test_one_particle_normalization():
    r = completeness_check((0,), (0,), P)
    assert r["pass"] and r["lhs"] == 1 / (1 - P.nu)


def test_completeness_two_particles():
    for x, y in [((0, 0), (0, 0)), ((0, 1), (0, 1)), ((0, 1), (0, 0)), ((1, 1), (0, 0)), ((0, 2), (0, 1))]:
        r = completeness_check(x, y, P)
        assert r["pass"], (x, y, r)


def test_completeness_matches_quadrature():
    for x, y in [((0, 0), (0, 0)), ((0, 1), (1, 1))]:
        exact = completeness_check(x, y, P)["lhs"]
        assert abs(complex(exact) - quadrature(x, y, 0, P)) < 1e-9


def test_free_walker():
    # one particle hops right with probability p each step
    for t in range(5):
        for k in range(t + 1):
            assert green_function(t, (k,), (0,), P) == comb(t, k) * P.p**k * (1 - P.p) ** (t - k)


def test_two_particles_match_window_propagation():
    for y in [(0, 0), (0, 1), (0, 2)]:
        for t in range(4):
            table = green_table(t, y, P)
            ref = propagate(y, t, P)
            for x in set(table) | set(ref):
                assert table.get(x, 0) == ref.get(x, 0), (y, t, x)
            assert sum(table.values()) == 1


def test_time_zero_is_delta():
    y = (0, 0, 1)
    table = green_table(0, y, P)
    assert table == {y: 1}


def test_float_path_three_particles():
    PF = P.as_float()
    for x, y in [((0, 0, 0), (0, 0, 0)), ((0, 1, 1), (0, 0, 1))]:
        a = completeness_check(x, y, PF, tol=1e-10)
        assert a["pass"]


def test_reachable_set():
    xs = reachable((0, 1), 2)
    assert all(len(x) == 2 and x[0] <= x[1] for x in xs)
    assert (0, 1) in xs and (2, 3) in xs
    brute = [x for x in itertools.product(range(0, 4), repeat=2) if x[0] <= x[1] and x[0] <= 2 and 1 <= x[1] <= 3]
    assert sorted(xs) == sorted(brute)


def test_domain_and_cap():
    with pytest.raises(ParameterError):
        completeness_check((0,) * 5, (0,) * 5, P)
    with pytest.raises(ValueError):
        green_function(1, (0, 1), (0,), P)


def test_rhs_clusters():
    assert completeness_rhs((0, 1), (0, 0), P) == 0
    assert completeness_rhs((0, 0), (0, 0), P) == (1 - P.q) ** -2 * (1 - P.q) * (1 - P.q**2) / (
        (1 - P.nu) * (1 - P.nu * P.q))


def test_outputs():
    table = green_table(1, (0,), P)
    text = green_csv(1, (0,), table)
    assert text.splitlines()[0] == "t,y1,x1,value"
    report = completeness_check((0,), (0,), P)
    assert '"pass": true' in completeness_json((0,), (0,), P, report)
