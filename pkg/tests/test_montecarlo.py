from fractions import Fraction as F
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhahn import _kernels_py
from qhahn.hopping import ModelParams, phi
from qhahn.montecarlo import (
    CounterRNG,
    HorizonError,
    PhiTable,
    SimConfig,
    chi_square_sampler,
    counter_uniform_array,
    exact_mean_current,
    run_current,
    run_stationary_test,
    sample_phi,
    simulate,
    step_parallel,
)

P = ModelParams(F(3, 10), F(7, 10), F(1, 2))


def test_known_splitmix_values():
    # reference outputs of the SplitMix64 finalizer sequence seeded with 0
    state, outs = 0, []
    for _ in range(3):
        outs.append(_kernels_py.mix64(state))
        state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    assert outs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_vectorized_draws_match_scalar():
    steps = np.arange(50)
    vec = counter_uniform_array(9, 2, steps, 5)
    assert [_kernels_py.counter_uniform(9, 2, int(s), 5) for s in steps] == list(vec)


def test_uniform_range():
    u = counter_uniform_array(1, 0, np.arange(10000), 0)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.02


def test_table_rows_end_at_one():
    table = PhiTable(P, 10)
    assert (table.cdf[:, -1] == 1.0).all()
    assert all(table.cdf[n, n] == 1.0 for n in range(11))
    assert (np.diff(table.cdf, axis=1) >= 0).all()


def test_horizon():
    table = PhiTable(P, 3)
    with pytest.raises(HorizonError):
        table.lookup(4, 0.5)


def test_sample_phi_zero_particles():
    rng = CounterRNG(0)
    assert (sample_phi(0, P, rng, size=100) == 0).all()


def test_single_particle_mean():
    rng = CounterRNG(4)
    draws = sample_phi(1, P, rng, size=10**6)
    p = float(P.p)
    sigma = np.sqrt(p * (1 - p) / len(draws))
    assert abs(draws.mean() - p) < 4 * sigma


def test_sampler_chi_square():
    rng = CounterRNG(12)
    for n in range(11):
        assert chi_square_sampler(n, P, 10**6, rng)["p_value"] > 1e-3


def test_near_binomial_law():
    from scipy.stats import binom, chisquare

    near = ModelParams(1 - 1e-9, 0.6, 0.2)
    rng = CounterRNG(2)
    n = 6
    draws = sample_phi(n, near, rng, size=200000)
    obs = np.bincount(draws, minlength=n + 1)
    exp = binom.pmf(np.arange(n + 1), n, near.p) * len(draws)
    assert chisquare(obs, exp / exp.sum() * len(draws)).pvalue > 1e-3


def test_step_edge_cases():
    rng = CounterRNG(0)
    assert step_parallel((0, 0, 0), P, rng) == (0, 0, 0)
    assert step_parallel((4,), P, rng) == (4,)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=6), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_step_conserves_particles(config, seed):
    rng = CounterRNG(seed)
    out = tuple(config)
    for t in range(5):
        out = step_parallel(out, P, rng, step=t)
    assert sum(out) == sum(config)


def test_single_particle_displacement():
    rng = CounterRNG(8)
    pos, moves = (1, 0, 0, 0), 0
    steps = 100000
    for t in range(steps):
        new = step_parallel(pos, P, rng, step=t)
        moves += new != pos
        pos = new
    p = float(P.p)
    assert abs(moves / steps - p) < 4 * np.sqrt(p * (1 - p) / steps)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(3, 2, P, steps=10, burn_in=20)
    with pytest.raises(ValueError):
        SimConfig(3, 2, P, steps=100, initial=(1, 0, 0))
    cfg = SimConfig(3, 2, P, steps=1000)
    assert cfg.burn_in == 600
    back = SimConfig.from_dict(cfg.to_dict())
    assert back.params == P and back.steps == 1000


def test_determinism_and_workers():
    cfg = SimConfig(3, 2, P, steps=20000, seed=5, workers=2)
    a, b = simulate(cfg), simulate(cfg)
    assert np.array_equal(a.codes, b.codes) and np.array_equal(a.current, b.current)
    assert a.per_worker == [10000, 10000]
    other = simulate(SimConfig(3, 2, P, steps=20000, seed=6, workers=2))
    assert not np.array_equal(a.codes, other.codes)


def test_stationary_small():
    cfg = SimConfig(3, 2, P, steps=200000, seed=1)
    report = run_stationary_test(cfg, threshold=0.02)
    assert report["pass"], report
    assert report["states"] == comb(4, 2)


def test_q_zero_stationary():
    q0 = ModelParams(F(0), F(3, 5), F(1, 5))
    report = run_stationary_test(SimConfig(3, 2, q0, steps=200000, seed=3), threshold=0.02)
    assert report["pass"], report


def test_uniform_limit_stationary():
    # at q = 1 the weights are 1/n!, the free-particle (multinomial) measure
    free = ModelParams(F(1), F(3, 5), F(1, 5))
    report = run_stationary_test(SimConfig(3, 2, free, steps=200000, seed=3), threshold=0.02)
    assert report["pass"], report


def test_current_two_state_chain():
    # one particle on two sites: flow across bond 0 is p/2 on average
    assert abs(exact_mean_current(2, 1, P) - float(P.p) / 2) < 1e-15
    out = run_current(SimConfig(2, 1, P, steps=200000, seed=7))
    assert abs(out["mean"] - float(P.p) / 2) < 3 * out["stderr"] + 1e-12


def test_current_matches_exact():
    out = run_current(SimConfig(3, 2, P, steps=300000, seed=11))
    assert abs(out["z_score"]) < 3


def test_empty_system():
    out = run_current(SimConfig(3, 0, P, steps=100, burn_in=0))
    assert out["mean"] == 0


def test_exact_current_formula():
    total = 0
    from qhahn.state_space import enumerate_configs, stationary_vector

    configs = enumerate_configs(3, 2)
    for c, w in zip(configs, stationary_vector(3, 2, P, configs)):
        total += w * sum(m * phi(m, c[1], P) for m in range(c[1] + 1))
    # every site gives the same mean flow by rotation invariance
    assert abs(float(total) - exact_mean_current(3, 2, P)) < 1e-15
