from fractions import Fraction as F
from math import comb

import numpy as np
import pytest

from qhahn.bethe import (
    amplitude,
    check_boundary,
    eigen_residual,
    free_equation_residual,
    ground_state,
    lambda_one,
    lambda_one_z,
    periodicity_residual,
    psi0,
    random_roots,
    roots_csv,
    s_matrix_u,
    s_matrix_z,
    solve_bethe,
    spectrum_match,
    u_to_z,
    z_to_u,
    zrp_system,
)
from qhahn.hopping import ModelParams
from qhahn.state_space import build_markov_matrix

P = ModelParams(F(3, 10), F(7, 10), F(1, 2))
PF = P.as_float()


def test_variable_change_roundtrip():
    rng = np.random.default_rng(0)
    for u in rng.normal(size=5) + 1j * rng.normal(size=5):
        assert abs(z_to_u(u_to_z(u, 0.5), 0.5) - u) < 1e-12


def test_one_particle_eigenvalue_both_forms():
    for u in [0.3 + 0.2j, -1.1j, 2.5]:
        assert abs(lambda_one(u, PF) - lambda_one_z(u_to_z(u, 0.5), PF)) < 1e-12


def test_s_matrix_forms_agree():
    rng = np.random.default_rng(1)
    for _ in range(10):
        u, v = random_roots(2, rng)
        assert abs(s_matrix_z(u_to_z(u, 0.5), u_to_z(v, 0.5), PF) - s_matrix_u(u, v, 0.3)) < 1e-10


def test_s_matrix_unitarity():
    u, v = 0.4 + 0.1j, -0.7 + 0.9j
    assert abs(s_matrix_u(u, v, 0.3) * s_matrix_u(v, u, 0.3) - 1) < 1e-12


def test_off_shell_identities():
    rng = np.random.default_rng(2)
    worst = 0.0
    for N in (2, 3):
        for _ in range(30):
            roots = random_roots(N, rng)
            x = tuple(sorted(int(v) for v in rng.integers(-3, 4, size=N)))
            worst = max(worst, free_equation_residual(x, roots, PF))
    assert worst < 1e-10
    assert check_boundary(PF, 2, samples=30)["pass"]
    assert check_boundary(PF, 3, samples=30)["pass"]


def test_one_particle_ring_roots():
    # z^L = 1 on a ring with one particle; eigenvalues are 1 - p + p/z
    L = 5
    roots = solve_bethe(L, 1, P)
    zs = sorted(np.angle(u_to_z(r.u[0], 0.5)) for r in roots)
    expected = sorted(np.angle(np.exp(2j * np.pi * k / L)) for k in range(L))
    assert np.allclose(zs, expected, atol=1e-9)


def test_ground_state_is_stationary():
    # coincident roots at u = 0: the eigenvector is the constant vector of M0
    gs = ground_state(2, P)
    assert gs.lam == 1 and gs.degenerate
    m0 = zrp_system(3, 2, P).m0
    assert np.allclose(m0 @ np.ones(len(m0)), 1, atol=1e-14)


@pytest.mark.parametrize("L,N", [(3, 2), (2, 2), (4, 2)])
def test_spectrum_complete(L, N):
    report = spectrum_match(L, N, P)
    assert report["pass"], report
    assert report["solutions"] == comb(L + N - 1, N)


def test_trivial_ring():
    report = spectrum_match(1, 3, P)
    assert report["pass"] and report["dimension"] == 1


def test_found_roots_are_eigenvectors_and_periodic():
    roots = solve_bethe(3, 2, P)
    M = build_markov_matrix(3, 2, PF).to_float_array()
    eig = np.linalg.eigvals(M)
    for r in roots[1:]:
        assert eigen_residual(r.u, 3, 2, P) < 1e-8
        assert periodicity_residual(r.u, 3, PF) < 1e-8
        assert np.min(np.abs(eig - r.lam)) < 1e-8


def test_psi0_under_root_relabelling():
    # relabelling the roots by pi divides the wave function by A_pi
    rng = np.random.default_rng(4)
    roots = list(random_roots(3, rng))
    pi = (2, 0, 1)
    relabelled = [roots[k] for k in pi]
    for x in [(0, 1, 3), (-2, 0, 0), (1, 1, 1)]:
        a = psi0(x, roots, PF)
        b = psi0(x, relabelled, PF)
        assert abs(b - a / amplitude(pi, roots, 0.3)) < 1e-10 * max(1, abs(a))


def test_roots_csv_layout():
    text = roots_csv(3, 2, solve_bethe(3, 2, P))
    rows = text.strip().splitlines()
    assert rows[0].split(",") == ["L", "N", "root_index", "re_u", "im_u", "re_lambda", "im_lambda", "residual"]
    assert len(rows) == 1 + 2 * comb(4, 2)
