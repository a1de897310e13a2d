from fractions import Fraction as F
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qhahn.bethe import psi0, random_roots, solve_bethe
from qhahn.hopping import ModelParams, phi
from qhahn.mappings import (
    amplitude_ratio_residuals,
    asep_bethe_residual,
    asep_boundary_check,
    asep_psi,
    asep_ring_configs,
    asep_stationary_vector,
    asep_step_cluster,
    asep_system,
    asep_to_zrp,
    build_asep_ring_matrix,
    particle_hole,
    particle_hole_check,
    roundtrip_check,
    solution_counts,
    theta_defect,
    trajectory_check,
    zrp_occupation_to_asep,
    zrp_to_asep,
)

P = ModelParams(F(3, 10), F(7, 10), F(1, 2))
PF = P.as_float()

weak = st.lists(st.integers(-20, 20), min_size=0, max_size=8).map(sorted)


def test_coordinate_map_example():
    assert zrp_to_asep((0, 0)) == (1, 2)
    assert asep_to_zrp((1, 2)) == (0, 0)


@given(weak)
def test_roundtrip_property(x):
    x = tuple(x)
    a = zrp_to_asep(x)
    assert all(u < v for u, v in zip(a, a[1:]))
    assert asep_to_zrp(a) == x


def test_ordering_violations():
    with pytest.raises(ValueError):
        zrp_to_asep((2, 1))
    with pytest.raises(ValueError):
        asep_to_zrp((1, 1))


def test_occupation_picture():
    # a site with n particles becomes n occupied sites and one empty site
    # coordinates (0, 0, 2) -> (1, 2, 5) on a ring of 3 + 3 sites
    assert zrp_occupation_to_asep((2, 0, 1)) == (0, 1, 1, 0, 0, 1)


def test_exhaustive_roundtrip():
    assert roundtrip_check(4, 3)["pass"]


@given(st.integers(1, 10).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.integers(0, n - 1)))))
def test_particle_hole_involution(args):
    size, occ = args
    c = tuple(sorted(occ))
    h = particle_hole(c, size)
    assert len(h) == size - len(c)
    assert particle_hole(h, size) == c


def test_particle_hole_full_ring():
    assert particle_hole(tuple(range(5)), 5) == ()


def test_particle_hole_dynamics():
    assert particle_hole_check(6, 2, P)["pass"]
    assert particle_hole_check(6, 3, P)["pass"]


def test_trajectory_correspondence():
    assert trajectory_check(3, 2, P)["pass"]
    assert trajectory_check(4, 3, P)["pass"]


def test_block_rule_single_block():
    # three particles in a block: the rightmost m step forward with phi(m|3)
    dist = asep_step_cluster((0, 1, 2), P)
    assert dist[(0, 1, 2)] + dist[(0, 1, 3)] + dist[(0, 2, 3)] + dist[(1, 2, 3)] == 1
    assert dist[(0, 2, 3)] == phi(2, 3, P)


def test_exclusion_ring_stochastic_and_stationary():
    for L, N in [(3, 2), (2, 3), (4, 2)]:
        M = build_asep_ring_matrix(L, N, P)
        assert all(s == 1 for s in M.column_sums())
        p = asep_stationary_vector(L, N, P, M.configs)
        assert M.matvec(p) == p
        assert M.dim == comb(L + N, N) == len(asep_ring_configs(L + N, N))


def test_exclusion_wave_function_is_shifted():
    rng = np.random.default_rng(0)
    roots = random_roots(2, rng)
    for xa in [(1, 2), (0, 5), (-3, 1)]:
        shifted = tuple(x - i - 1 for i, x in enumerate(xa))
        assert asep_psi(xa, roots, PF) == psi0(shifted, roots, PF)


def test_boundary_condition():
    assert asep_boundary_check(PF, 2, samples=30)["pass"]
    assert asep_boundary_check(PF, 3, samples=30)["pass"]
    q0 = ModelParams(0.0, 0.6, 0.2)
    assert asep_boundary_check(q0, 2)["pass"]


def test_amplitude_ratio_sign():
    rng = np.random.default_rng(1)
    res = amplitude_ratio_residuals(random_roots(3, rng), PF)
    assert res["plus"] < 1e-10
    assert res["minus"] > 1e-3


def test_one_particle_exclusion_roots():
    # theta = z, so z^(L+1) = 1
    roots = solve_bethe(3, 1, P, system=asep_system(3, 1, P))
    assert len(roots) == 4
    for r in roots:
        assert abs(theta_defect(r.u, 3, 1, PF)) < 1e-9


def test_solution_counts_and_ratio():
    for L, N in [(2, 2), (3, 2)]:
        c = solution_counts(L, N, P)
        assert c["zrp_solutions"] == c["zrp_expected"]
        assert c["asep_solutions"] == c["asep_expected"]
        assert abs(c["ratio"] - L / (L + N)) < 1e-12
        assert c["max_theta_defect"] < 1e-9


def test_zero_range_roots_fail_exclusion_equations():
    roots = solve_bethe(3, 2, P)
    worst = max(float(np.abs(asep_bethe_residual(r.u, 3, 2, PF)).max()) for r in roots[1:])
    assert worst > 1e-3
