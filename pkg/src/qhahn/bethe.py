"""Coordinate Bethe ansatz for the chipping model on Z and on a ring.

Roots are the ``u`` variables; the plane-wave factors are
``z(u) = (1 - nu u)/(1 - u)``.  ``psi0`` is the right eigenvector of the
conjugated matrix ``M0 = S M S^-1`` (``S = diag(1/P_st)``), so
``P_st * psi0`` is a right eigenvector of ``M`` itself.

Everything here is floating point (complex128).
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import linear_sum_assignment

from .hopping import ModelParams
from .state_space import (
    build_markov_matrix,
    conjugate_m0,
    occupation_to_coords,
    stationary_vector,
)

log = logging.getLogger(__name__)

__all__ = [
    "u_to_z",
    "z_to_u",
    "s_matrix_u",
    "s_matrix_z",
    "lambda_one",
    "lambda_one_z",
    "lambda_n",
    "amplitude",
    "psi0",
    "free_equation_residual",
    "boundary_residual",
    "check_boundary",
    "random_roots",
    "bethe_residual",
    "BetheRootSet",
    "RingSystem",
    "zrp_system",
    "solve_bethe",
    "ground_state",
    "eigen_residual",
    "periodicity_residual",
    "spectrum_match",
    "roots_csv",
]


def _fp(params: ModelParams):
    return complex(params.q), complex(params.mu), complex(params.nu), complex(params.p)


def u_to_z(u, nu):
    return (1 - nu * u) / (1 - u)


def z_to_u(z, nu):
    return (1 - z) / (nu - z)


def s_matrix_u(u, v, q):
    den = v - q * u
    if den == 0:
        raise ZeroDivisionError("S-matrix pole at v = q u")
    return (q * v - u) / den


def s_matrix_z(zi, zj, params: ModelParams):
    """Two-particle amplitude ratio written in plane-wave variables."""
    a, b, g = (complex(x) for x in (params.alpha, params.beta, params.gamma))
    den = a + b * zj + g * zi * zj - zi
    if den == 0:
        raise ZeroDivisionError("S-matrix pole")
    return -(a + b * zi + g * zi * zj - zj) / den


def lambda_one(u, params: ModelParams):
    q, mu, nu, _ = _fp(params)
    if nu * u == 1:
        raise ZeroDivisionError("eigenvalue pole at u = 1/nu")
    return (1 - mu * u) / (1 - nu * u)


def lambda_one_z(z, params: ModelParams):
    p = complex(params.p)
    if z == 0:
        raise ZeroDivisionError("eigenvalue pole at z = 0")
    return 1 - p + p / z


def lambda_n(roots, params: ModelParams):
    out = 1 + 0j
    for u in roots:
        out *= lambda_one(u, params)
    return out


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def amplitude(perm, roots, q):
    """sgn(perm) prod_{i<j} (u_{perm i} - q u_{perm j}) / (u_i - q u_j)."""
    n = len(roots)
    val = complex(_perm_sign(perm))
    for i in range(n):
        for j in range(i + 1, n):
            den = roots[i] - q * roots[j]
            if den == 0:
                raise ZeroDivisionError("coincident roots")
            val *= (roots[perm[i]] - q * roots[perm[j]]) / den
    return val


def _amplitudes(roots, params):
    q = complex(params.q)
    perms = list(itertools.permutations(range(len(roots))))
    return perms, [amplitude(p, roots, q) for p in perms]


def psi0(x, roots, params: ModelParams, _cache=None):
    """Bethe wave function at coordinates ``x`` (any integer tuple)."""
    nu = complex(params.nu)
    roots = [complex(u) for u in roots]
    perms, amps = _cache if _cache is not None else _amplitudes(roots, params)
    z = [u_to_z(u, nu) for u in roots]
    total = 0j
    for perm, amp in zip(perms, amps):
        term = amp
        for i, xi in enumerate(x):
            term *= z[perm[i]] ** xi
        total += term
    return total


def free_equation_residual(x, roots, params: ModelParams) -> float:
    """|Lambda psi0(x) - sum_k prod_i (p or 1-p) psi0(x - k)| over k in {0,1}^N."""
    p = complex(params.p)
    cache = _amplitudes([complex(u) for u in roots], params)
    lhs = lambda_n(roots, params) * psi0(x, roots, params, cache)
    rhs = 0j
    for k in itertools.product((0, 1), repeat=len(x)):
        w = 1 + 0j
        for ki in k:
            w *= p if ki else 1 - p
        rhs += w * psi0(tuple(xi - ki for xi, ki in zip(x, k)), roots, params, cache)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def boundary_residual(x, i: int, roots, params: ModelParams) -> float:
    """Residual of the two-particle boundary relation at positions i, i+1.

    The unphysical value with coordinates (.., x, x-1, ..) must equal
    alpha psi(x-1, x-1) + beta psi(x-1, x) + gamma psi(x, x).
    """
    a, b, g = (complex(v) for v in (params.alpha, params.beta, params.gamma))
    cache = _amplitudes([complex(u) for u in roots], params)
    base = list(x)
    xv = base[i]

    def at(left, right):
        y = list(base)
        y[i], y[i + 1] = left, right
        return psi0(tuple(y), roots, params, cache)

    lhs = at(xv, xv - 1)
    rhs = a * at(xv - 1, xv - 1) + b * at(xv - 1, xv) + g * at(xv, xv)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def random_roots(n: int, rng, radius=(0.3, 3.0)):
    r = rng.uniform(*radius, size=n)
    th = rng.uniform(0, 2 * np.pi, size=n)
    return list(r * np.exp(1j * th))


def check_boundary(params: ModelParams, N: int = 2, samples: int = 20, seed: int = 0) -> dict:
    """Off-shell boundary identity at random roots and positions."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        roots = random_roots(N, rng)
        x = sorted(int(v) for v in rng.integers(-3, 4, size=N))
        for i in range(N - 1):
            worst = max(worst, boundary_residual(x, i, roots, params))
    return {"N": N, "samples": samples, "max_residual": worst, "pass": worst < 1e-10}


def bethe_residual(roots, L: int, N: int, params: ModelParams, theta: int = 0) -> np.ndarray:
    """LHS - RHS of z(u_i)^L = (-1)^(N-1) prod_{j != i} (u_i - q u_j)/(u_j - q u_i).

    ``theta=1`` multiplies the left side by prod_k z(u_k).
    """
    q, _, nu, _ = _fp(params)
    roots = [complex(u) for u in roots]
    if len(roots) != N:
        raise ValueError("need N roots")
    out = np.empty(N, dtype=complex)
    sign = (-1) ** (N - 1)
    for i, ui in enumerate(roots):
        if ui == 1 or nu * ui == 1:
            raise ZeroDivisionError("root at a pole of z(u)")
        rhs = complex(sign)
        for j, uj in enumerate(roots):
            if j != i:
                rhs *= (ui - q * uj) / (uj - q * ui)
        lhs = u_to_z(ui, nu) ** L
        if theta:
            for uk in roots:
                lhs *= u_to_z(uk, nu)
        out[i] = lhs - rhs
    return out


@dataclass
class BetheRootSet:
    u: np.ndarray
    lam: complex
    residual: float
    nu: complex = 0j
    degenerate: bool = False
    notes: list = field(default_factory=list)

    @property
    def z(self) -> np.ndarray:
        return np.array([u_to_z(u, self.nu) for u in self.u])


def ground_state(N: int, params: ModelParams) -> BetheRootSet:
    """The stationary solution, all u_i = 0 (Lambda = 1)."""
    return BetheRootSet(np.zeros(N, dtype=complex), 1 + 0j, 0.0, complex(params.nu), degenerate=True,
                        notes=["coincident roots u = 0: stationary state"])


# --- Newton on the polynomial form --------------------------------------------------


def _poly_system(U, L, q, nu, theta=0):
    """P_i = (1-nu u_i)^L prod_{j!=i}(u_j - q u_i) - s (1-u_i)^L prod_{j!=i}(u_i - q u_j).

    With ``theta=1`` the two sides pick up prod_k (1 - nu u_k) and
    prod_k (1 - u_k), i.e. an extra factor prod_k z_k on the left.
    ``U`` has shape (batch, N).  Returns values (batch, N) and Jacobian (batch, N, N).
    """
    S, N = U.shape
    s = (-1) ** (N - 1)
    F = np.empty((S, N), dtype=complex)
    J = np.zeros((S, N, N), dtype=complex)
    ones = np.ones(S, dtype=complex)
    ta, tb = ones.copy(), ones.copy()
    dta, dtb = np.zeros((S, N), dtype=complex), np.zeros((S, N), dtype=complex)
    if theta:
        for k in range(N):
            ta = ta * (1 - nu * U[:, k])
            tb = tb * (1 - U[:, k])
        for l in range(N):
            ra, rb = ones.copy(), ones.copy()
            for k in range(N):
                if k != l:
                    ra = ra * (1 - nu * U[:, k])
                    rb = rb * (1 - U[:, k])
            dta[:, l] = -nu * ra
            dtb[:, l] = -rb
    for i in range(N):
        ui = U[:, i]
        a_pow = (1 - nu * ui) ** L
        b_pow = (1 - ui) ** L
        others = [j for j in range(N) if j != i]
        fa = {j: U[:, j] - q * ui for j in others}
        fb = {j: ui - q * U[:, j] for j in others}
        pa, pb = ones.copy(), ones.copy()
        for j in others:
            pa = pa * fa[j]
            pb = pb * fb[j]
        A, B = a_pow * pa, b_pow * pb
        F[:, i] = A * ta - s * B * tb
        dA = np.zeros((S, N), dtype=complex)
        dB = np.zeros((S, N), dtype=complex)
        dA[:, i] = -nu * L * (1 - nu * ui) ** (L - 1) * pa
        dB[:, i] = -L * (1 - ui) ** (L - 1) * pb
        for j in others:
            ra, rb = ones.copy(), ones.copy()
            for k in others:
                if k != j:
                    ra = ra * fa[k]
                    rb = rb * fb[k]
            dA[:, i] += a_pow * (-q) * ra
            dB[:, i] += b_pow * rb
            dA[:, j] = a_pow * ra
            dB[:, j] = b_pow * (-q) * rb
        for l in range(N):
            J[:, i, l] = dA[:, l] * ta + A * dta[:, l] - s * (dB[:, l] * tb + B * dtb[:, l])
    return F, J


def _newton(U, L, q, nu, theta=0, iters=80, tol=1e-13):
    U = U.copy()
    N = U.shape[1]
    for _ in range(iters):
        F, J = _poly_system(U, L, q, nu, theta)
        scale = 1 + np.abs(U).max(axis=1) ** (L + N - 1 + theta * N)
        if np.all(np.abs(F).max(axis=1) / scale < tol):
            break
        try:
            step = np.linalg.solve(J, -F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.zeros_like(U)
            for b in range(U.shape[0]):
                try:
                    step[b] = np.linalg.lstsq(J[b], -F[b], rcond=None)[0]
                except np.linalg.LinAlgError:
                    pass
        bad = ~np.isfinite(step).all(axis=1)
        step[bad] = 0
        # damping: cap the step relative to the current point
        norm = np.abs(step).max(axis=1)
        cap = 0.5 * (1 + np.abs(U).max(axis=1))
        factor = np.where(norm > cap, cap / np.maximum(norm, 1e-300), 1.0)
        U = U + step * factor[:, None]
    return U


def _seeds(L, N, nu, n_random, rng, structured=True):
    seeds = []
    omega = np.exp(2j * np.pi * np.arange(L) / L)
    # perturbed products of one-particle solutions
    for combo in itertools.combinations(range(L), N) if structured else ():
        z = omega[list(combo)] * (1 + 0.02 * rng.standard_normal(N))
        seeds.append(z)
    half = n_random // 2
    for _ in range(half):
        r = np.exp(rng.uniform(np.log(0.4), np.log(2.5), size=N))
        seeds.append(r * np.exp(2j * np.pi * rng.uniform(size=N)))
    Z = np.array(seeds, dtype=complex).reshape(-1, N)
    with np.errstate(divide="ignore", invalid="ignore"):
        U = (1 - Z) / (nu - Z)
    # direct u-space seeds reach clustered roots that z-seeds rarely hit
    r = 2.5 * np.sqrt(rng.uniform(size=(n_random - half, N)))
    U_direct = r * np.exp(2j * np.pi * rng.uniform(size=(n_random - half, N)))
    return np.concatenate([U, U_direct])


def _same_set(a, b, tol):
    if len(a) <= 6:
        return min(np.abs(a[list(p)] - b).max() for p in itertools.permutations(range(len(a)))) < tol
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max() < tol


@dataclass
class RingSystem:
    """What the root search needs to know about one ring model.

    ``coords[k]`` are the arguments of ``psi0`` for state ``k`` of the
    conjugated matrix ``m0``; ``theta`` selects the extra prod_k z_k factor.
    """

    L: int
    N: int
    theta: int
    m0: np.ndarray
    coords: list
    target: int


def zrp_system(L: int, N: int, params: ModelParams) -> RingSystem:
    fparams = params.as_float()
    M = build_markov_matrix(L, N, fparams)
    m0 = conjugate_m0(M, stationary_vector(L, N, fparams, M.configs)).to_float_array()
    coords = [occupation_to_coords(c) for c in M.configs]
    return RingSystem(L, N, 0, m0, coords, comb(L + N - 1, N))


def eigen_residual(roots, L: int, N: int, params: ModelParams, system: RingSystem | None = None) -> float:
    """||M0 psi - Lambda psi|| / ||psi|| on the ring state space."""
    system = system or zrp_system(L, N, params)
    cache = _amplitudes([complex(u) for u in roots], params)
    vec = np.array([psi0(x, roots, params, cache) for x in system.coords])
    norm = np.linalg.norm(vec)
    if norm == 0 or not np.isfinite(norm):
        return np.inf
    return float(np.linalg.norm(system.m0 @ vec - lambda_n(roots, params) * vec) / norm)


def periodicity_residual(roots, L: int, params: ModelParams, x=None) -> float:
    """|psi(x_1..x_N) - psi(x_2..x_N, x_1 + L)| relative to |psi(x)|."""
    N = len(roots)
    x = tuple(range(N)) if x is None else tuple(x)
    a = psi0(x, roots, params)
    b = psi0(x[1:] + (x[0] + L,), roots, params)
    return abs(a - b) / max(abs(a), 1e-300)


def solve_bethe(L: int, N: int, params: ModelParams, n_random: int = 400, seed: int = 0,
                tol: float = 1e-10, dedupe_tol: float = 1e-8, max_rounds: int = 10,
                system: RingSystem | None = None) -> list:
    """Multi-start Newton search for ring Bethe roots.

    Batches of ``n_random`` seeds are tried until the number of distinct
    solutions reaches the state-space dimension or ``max_rounds`` is spent.

    Returns deduplicated root sets including the stationary one.  Candidates
    are accepted only if the roots are distinct, the rational-form residual is
    below ``tol`` and the assembled vector really is an eigenvector of M0.
    """
    if N == 0:
        return [ground_state(0, params)]
    q, _, nu, _ = _fp(params)
    rng = np.random.default_rng(seed)
    system = system or zrp_system(L, N, params)

    found = [ground_state(N, params)]
    structured = True
    for _ in range(max_rounds):
        U0 = _seeds(L, N, nu, n_random, rng, structured)
        structured = False
        U0 = U0[np.isfinite(U0).all(axis=1)]
        cands = _newton(U0, L, q, nu, system.theta)
        # real parameters: the conjugate of a solution is a solution
        cands = np.concatenate([cands, cands.conj()]) if np.isreal(q) and np.isreal(nu) else cands
        for u in cands:
            if not np.isfinite(u).all():
                continue
            rs = _accept(u, params, system, tol)
            if rs is None or any(_same_set(f.u, rs.u, dedupe_tol) for f in found):
                continue
            found.append(rs)
        if len(found) >= system.target:
            break
    if len(found) != system.target:
        log.info("Bethe search at L=%d N=%d found %d of %d solutions", L, N, len(found), system.target)
    return found


def _accept(u, params, system: RingSystem, tol):
    q, _, nu, _ = _fp(params)
    L, N = system.L, system.N
    scale = 1 + np.abs(u).max()
    if N > 1 and np.abs(u).max() < 1e-3:
        # collapsing onto the coincident stationary roots
        return None
    for i in range(N):
        if abs(1 - u[i]) < 1e-9 or abs(1 - nu * u[i]) < 1e-9:
            return None
        for j in range(N):
            if i != j and (abs(u[i] - u[j]) < 1e-6 * scale or abs(u[j] - q * u[i]) < 1e-9 * scale):
                return None
    try:
        res = float(np.abs(bethe_residual(u, L, N, params, system.theta)).max())
    except ZeroDivisionError:
        return None
    zs = [abs(u_to_z(x, nu)) for x in u]
    zmag = max(zs) ** L * (np.prod(zs) if system.theta else 1.0)
    if not res < tol * max(1.0, zmag):
        return None
    if eigen_residual(u, L, N, params, system) > 1e-8:
        return None
    return BetheRootSet(np.array(u), complex(lambda_n(u, params)), res, nu)


def spectrum_match(L: int, N: int, params: ModelParams, tol: float = 1e-8, roots=None, **kw) -> dict:
    """Match Bethe eigenvalues against the dense spectrum of M."""
    fparams = params.as_float()
    M = build_markov_matrix(L, N, fparams).to_float_array()
    eig = np.linalg.eigvals(M)
    roots = roots if roots is not None else solve_bethe(L, N, params, **kw)
    lams = np.array([r.lam for r in roots])
    cost = np.abs(eig[:, None] - lams[None, :]) if len(lams) else np.zeros((len(eig), 0))
    r, c = linear_sum_assignment(cost) if len(lams) else (np.array([], int), np.array([], int))
    gaps = cost[r, c] if len(r) else np.array([])
    good = gaps < tol
    return {
        "L": L,
        "N": N,
        "dimension": len(eig),
        "solutions": len(roots),
        "expected_solutions": comb(L + N - 1, N),
        "matched": int(good.sum()),
        "unmatched_eigenvalues": len(eig) - int(good.sum()),
        "unmatched_solutions": len(roots) - int(good.sum()),
        "max_gap": float(gaps.max()) if len(gaps) else 0.0,
        "pass": bool(good.sum() == len(eig) == len(roots)),
    }


def roots_csv(L: int, N: int, roots, params: ModelParams | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "N", "root_index", "re_u", "im_u", "re_lambda", "im_lambda", "residual"])
    for idx, rs in enumerate(roots):
        for u in rs.u:
            w.writerow([L, N, idx, f"{u.real:.17g}", f"{u.imag:.17g}",
                        f"{rs.lam.real:.17g}", f"{rs.lam.imag:.17g}", f"{rs.residual:.3g}"])
    return buf.getvalue()
