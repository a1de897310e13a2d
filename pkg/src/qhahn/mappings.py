"""Zero-range / exclusion correspondence and the particle-hole map.

A zero-range configuration in coordinate form ``x_1 <= ... <= x_N`` maps to
the exclusion configuration ``x_i + i`` (strictly increasing).  A site with n
particles becomes a block of n occupied sites followed by one empty site, so
the exclusion ring has ``L + N`` sites.

Exclusion dynamics: every maximal block of n particles moves its rightmost m
particles one step forward with probability phi(m|n), all blocks at once.
On Z this is the zero-range kernel pushed through the coordinate map
(:func:`asep_step_via_zrp`); :func:`asep_step_cluster` applies the block rule
directly and serves as the independent check.
"""
from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .bethe import (
    RingSystem,
    _amplitudes,
    bethe_residual,
    psi0,
    random_roots,
    s_matrix_z,
    solve_bethe,
    u_to_z,
    zrp_system,
)
from .hopping import ModelParams, phi, site_weight
from .state_space import (
    TransitionMatrix,
    coords_to_occupation,
    enumerate_configs,
    max_states,
    occupation_to_coords,
    propagate,
    StateSpaceTooLarge,
)

__all__ = [
    "zrp_to_asep",
    "asep_to_zrp",
    "zrp_occupation_to_asep",
    "particle_hole",
    "asep_step_cluster",
    "asep_step_via_zrp",
    "hole_step",
    "particle_hole_check",
    "trajectory_check",
    "roundtrip_check",
    "asep_ring_configs",
    "build_asep_ring_matrix",
    "asep_stationary_vector",
    "asep_system",
    "asep_psi",
    "asep_boundary_residual",
    "asep_boundary_check",
    "amplitude_ratio_residuals",
    "asep_bethe_residual",
    "theta_defect",
    "solution_counts",
]


def zrp_to_asep(coords) -> tuple:
    coords = tuple(coords)
    if any(a > b for a, b in zip(coords, coords[1:])):
        raise ValueError(f"zero-range coordinates must be weakly increasing: {coords}")
    return tuple(x + i + 1 for i, x in enumerate(coords))


def asep_to_zrp(coords) -> tuple:
    coords = tuple(coords)
    if any(a >= b for a, b in zip(coords, coords[1:])):
        raise ValueError(f"exclusion coordinates must be strictly increasing: {coords}")
    return tuple(x - i - 1 for i, x in enumerate(coords))


def zrp_occupation_to_asep(occ) -> tuple:
    """Ring occupation vector on L sites -> 0/1 vector on L + N sites."""
    N = sum(occ)
    out = [0] * (len(occ) + N)
    for x in zrp_to_asep(occupation_to_coords(occ)):
        out[x % len(out)] = 1
    return tuple(out)


def particle_hole(coords, size: int) -> tuple:
    """Swap occupied and empty sites on a ring of ``size`` sites."""
    occupied = set(coords)
    if any(not 0 <= x < size for x in occupied):
        raise ValueError("coordinate outside the ring")
    return tuple(x for x in range(size) if x not in occupied)


def _blocks(coords, size=None):
    """Maximal runs of consecutive particles as (last site, length).

    On a ring (``size`` given) a run may wrap around.
    """
    coords = sorted(coords)
    occupied = set(coords)
    out = []
    for x in coords:
        if _wrap(x + 1, size) in occupied:
            continue
        n = 1
        while _wrap(x - n, size) in occupied and n < len(coords):
            n += 1
        out.append((x, n))
    return out


def _wrap(x, size):
    return x if size is None else x % size


def asep_step_cluster(coords, params: ModelParams, size=None) -> dict:
    """One parallel step of the block rule; returns {new coords: probability}."""
    coords = tuple(sorted(coords))
    blocks = _blocks(coords, size)
    result: dict = {}
    for moves in itertools.product(*(range(n + 1) for _, n in blocks)):
        w = 1
        new = set(coords)
        for (end, n), m in zip(blocks, moves):
            w = w * phi(m, n, params)
            moved = [end - k for k in range(m)]
            new.difference_update(_wrap(x, size) for x in moved)
            new.update(_wrap(x + 1, size) for x in moved)
        if w == 0:
            continue
        key = tuple(sorted(new))
        result[key] = result.get(key, 0) + w
    return result


def hole_step(coords, params: ModelParams, size: int) -> dict:
    """One step of the particle-hole image of the block rule on a ring.

    Each particle with a block of n holes directly to its left jumps m sites
    left, over those holes, with probability phi(m|n).
    """
    occupied = set(coords)
    movers = []
    for h in sorted(occupied):
        n = 0
        while n < size - len(occupied) and (h - n - 1) % size not in occupied:
            n += 1
        movers.append((h, n))
    result: dict = {}
    for moves in itertools.product(*(range(n + 1) for _, n in movers)):
        w = 1
        new = []
        for (h, n), m in zip(movers, moves):
            w = w * phi(m, n, params)
            new.append((h - m) % size)
        if w == 0:
            continue
        key = tuple(sorted(new))
        result[key] = result.get(key, 0) + w
    return result


def particle_hole_check(size: int, N: int, params: ModelParams) -> dict:
    """Block-rule step followed by particle_hole equals particle_hole followed by hole_step."""
    mismatches = 0
    configs = asep_ring_configs(size, N)
    for c in configs:
        direct = {particle_hole(t, size): w for t, w in asep_step_cluster(c, params, size).items()}
        if direct != hole_step(particle_hole(c, size), params, size):
            mismatches += 1
    return {"states": len(configs), "mismatches": mismatches, "pass": mismatches == 0}


def asep_step_via_zrp(coords, params: ModelParams) -> dict:
    """One step on Z obtained by mapping to zero-range, stepping, mapping back."""
    y = asep_to_zrp(coords)
    return {zrp_to_asep(x): p for x, p in propagate(y, 1, params).items()}


def trajectory_check(L: int, N: int, params: ModelParams) -> dict:
    """Compare both exclusion kernels from every zero-range state on L sites.

    Infinite-lattice convention: the L-site block is a window of Z, nothing wraps.
    """
    mismatches = 0
    states = 0
    for occ in enumerate_configs(L, N):
        a = asep_step_via_zrp(zrp_to_asep(occupation_to_coords(occ)), params)
        b = asep_step_cluster(zrp_to_asep(occupation_to_coords(occ)), params)
        states += 1
        if a != b:
            mismatches += 1
    return {"states": states, "mismatches": mismatches, "pass": mismatches == 0}


def roundtrip_check(L: int, N: int) -> dict:
    """zrp -> asep -> zrp over every ring configuration, and the reverse on the image."""
    bad = 0
    count = 0
    for occ in enumerate_configs(L, N):
        x = occupation_to_coords(occ)
        a = zrp_to_asep(x)
        count += 1
        if asep_to_zrp(a) != x or zrp_to_asep(asep_to_zrp(a)) != a:
            bad += 1
        if coords_to_occupation(asep_to_zrp(a), L) != tuple(occ):
            bad += 1
    return {"states": count, "failures": bad, "pass": bad == 0}


# --- exclusion ring ------------------------------------------------------------------


def asep_ring_configs(size: int, N: int) -> list:
    if comb(size, N) > max_states():
        raise StateSpaceTooLarge(f"dimension {comb(size, N)} exceeds cap {max_states()}")
    return list(itertools.combinations(range(size), N))


def build_asep_ring_matrix(L: int, N: int, params: ModelParams) -> TransitionMatrix:
    """Column-stochastic block-rule matrix on a ring of L + N sites."""
    size = L + N
    configs = asep_ring_configs(size, N)
    index = {c: i for i, c in enumerate(configs)}
    entries: dict = {}
    for col, src in enumerate(configs):
        for tgt, w in asep_step_cluster(src, params, size).items():
            key = (index[tgt], col)
            entries[key] = entries.get(key, 0) + w
    return TransitionMatrix(configs, entries, {}, ring=True)


def _gaps(coords, size):
    """Block length in front of each hole, i.e. the zero-range occupations."""
    occupied = set(coords)
    out = []
    for h in range(size):
        if h in occupied:
            continue
        n, s = 0, (h - 1) % size
        while s in occupied:
            n += 1
            s = (s - 1) % size
        out.append(n)
    return out


def asep_stationary_vector(L: int, N: int, params: ModelParams, configs=None) -> list:
    configs = configs or asep_ring_configs(L + N, N)
    raw = []
    for c in configs:
        w = 1
        for n in _gaps(c, L + N):
            w = w * site_weight(n, params)
        raw.append(w)
    total = sum(raw)
    return [w / total for w in raw]


def asep_system(L: int, N: int, params: ModelParams) -> RingSystem:
    """Root-search description of the exclusion ring (theta factor switched on)."""
    fparams = params.as_float()
    M = build_asep_ring_matrix(L, N, fparams)
    p_st = asep_stationary_vector(L, N, fparams, M.configs)
    m0 = M.to_float_array() * np.array(p_st)[None, :] / np.array(p_st)[:, None]
    coords = [asep_to_zrp(c) for c in M.configs]
    return RingSystem(L, N, 1, m0, coords, comb(L + N, N))


def asep_psi(xa, roots, params: ModelParams, _cache=None):
    """Exclusion wave function: psi0 at the shifted coordinates x_i - i."""
    return psi0(tuple(x - i - 1 for i, x in enumerate(xa)), roots, params, _cache)


def asep_boundary_residual(xa, i: int, roots, params: ModelParams) -> float:
    """psi(.., x, x, ..) = alpha psi(.., x-1, x, ..) + beta psi(.., x-1, x+1, ..) + gamma psi(.., x, x+1, ..)."""
    a, b, g = (complex(v) for v in (params.alpha, params.beta, params.gamma))
    cache = _amplitudes([complex(u) for u in roots], params)
    base = list(xa)
    xv = base[i]

    def at(left, right):
        y = list(base)
        y[i], y[i + 1] = left, right
        return asep_psi(tuple(y), roots, params, cache)

    lhs = at(xv, xv)
    rhs = a * at(xv - 1, xv) + b * at(xv - 1, xv + 1) + g * at(xv, xv + 1)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def asep_boundary_check(params: ModelParams, N: int = 2, samples: int = 20, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        roots = random_roots(N, rng)
        xa = sorted(int(v) for v in rng.integers(-4, 5, size=N))
        for i in range(N - 1):
            worst = max(worst, asep_boundary_residual(xa, i, roots, params))
    return {"N": N, "samples": samples, "max_residual": worst, "pass": worst < 1e-10}


def amplitude_ratio_residuals(roots, params: ModelParams) -> dict:
    """Compare exclusion amplitude ratios with +-(z_a/z_b) S(z_a, z_b).

    Exclusion amplitudes are A_s prod_i z_{s_i}^(-i).  For every s and every
    adjacent transposition the ratio is tested against both signs; returns
    the worst relative residual for each.
    """
    roots = [complex(u) for u in roots]
    nu = complex(params.nu)
    z = [u_to_z(u, nu) for u in roots]
    perms, amps = _amplitudes(roots, params)
    table = dict(zip(perms, amps))
    N = len(roots)

    def asep_amp(perm):
        v = table[perm]
        for i, k in enumerate(perm):
            v *= z[k] ** (-(i + 1))
        return v

    worst = {"plus": 0.0, "minus": 0.0}
    for perm in perms:
        for i in range(N - 1):
            swapped = list(perm)
            swapped[i], swapped[i + 1] = swapped[i + 1], swapped[i]
            ratio = asep_amp(tuple(swapped)) / asep_amp(perm)
            a, b = perm[i + 1], perm[i]
            pred = z[a] / z[b] * s_matrix_z(z[a], z[b], params)
            for name, sign in (("plus", 1), ("minus", -1)):
                worst[name] = max(worst[name], abs(ratio - sign * pred) / max(1.0, abs(ratio)))
    return worst


def asep_bethe_residual(roots, L: int, N: int, params: ModelParams) -> np.ndarray:
    """z_i^L prod_k z_k - prod_{j != i} S(z_i, z_j), in the u variables."""
    return bethe_residual(roots, L, N, params, theta=1)


def theta_defect(roots, L: int, N: int, params: ModelParams) -> complex:
    """theta^(L+N) - 1 with theta = prod z_k."""
    nu = complex(params.nu)
    theta = 1 + 0j
    for u in roots:
        theta *= u_to_z(complex(u), nu)
    return theta ** (L + N) - 1


def solution_counts(L: int, N: int, params: ModelParams, **kw) -> dict:
    """Distinct Bethe solutions on both rings, validated against each matrix."""
    zrp = solve_bethe(L, N, params, system=zrp_system(L, N, params), **kw)
    asep = solve_bethe(L, N, params, system=asep_system(L, N, params), **kw)
    return {
        "L": L,
        "N": N,
        "zrp_solutions": len(zrp),
        "zrp_expected": comb(L + N - 1, N),
        "asep_solutions": len(asep),
        "asep_expected": comb(L + N, N),
        "ratio": len(zrp) / len(asep) if asep else float("nan"),
        "expected_ratio": L / (L + N),
        "max_theta_defect": max((abs(theta_defect(r.u, L, N, params)) for r in asep if not r.degenerate),
                                default=0.0),
    }
