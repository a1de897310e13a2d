"""Completeness integral and infinite-lattice Green function.

For coordinates ``x`` (final) and ``y`` (initial) the integrand summed over
permutations ``s`` is

    A_s(u) prod_i Lambda(u_i)^t (1 - nu u_{s_i})^(d_i - 1) / (1 - u_{s_i})^(d_i + 1),
    d_i = x_i - y_{s_i},

with ``A_s(u) = sgn(s) prod_{i<j} (u_{s_i} - q u_{s_j}) / (u_i - q u_j)``.
The contour encloses 0, 1 and the cross poles ``u_i = q u_j``; see
:mod:`qhahn.residues` for the exact nesting.  The orientation is fixed by the
one-particle normalization (the N = 1, t = 0 integral must give
``+1/(1 - nu)``), which amounts to an overall sign ``(-1)^N`` on the sum of
counterclockwise residues.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from fractions import Fraction
from itertools import groupby

import numpy as np

from .hopping import ModelParams, ParameterError, format_scalar
from .qcalc import q_pochhammer
from .residues import Expression, _canon, integrate_all

__all__ = [
    "MAX_PARTICLES",
    "integrand",
    "contour_residue_sum",
    "cluster_sizes",
    "completeness_rhs",
    "completeness_check",
    "green_prefactor",
    "green_function",
    "green_table",
    "reachable",
    "quadrature",
    "green_csv",
    "completeness_json",
]

MAX_PARTICLES = 4


def _check_domain(params: ModelParams, N: int):
    q, nu = params.q, params.nu
    if not (abs(q) < 1 and abs(nu) < 1):
        raise ParameterError("contour prescription needs |q| < 1 and |nu| < 1")
    if N > MAX_PARTICLES:
        raise ParameterError(f"residue evaluation capped at N = {MAX_PARTICLES}")


def _sign(perm) -> int:
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inv % 2 else 1


def _lin(const, *pairs):
    return _canon([(-1, const)] + list(pairs))


def integrand(perm, x, y, t: int, params: ModelParams) -> Expression:
    """One permutation term of the Green integrand as an Expression."""
    q, mu, nu = params.q, params.mu, params.nu
    N = len(x)
    one = 1 + 0 * q
    factors = []
    for i in range(N):
        for j in range(i + 1, N):
            factors.append((_lin(0, (perm[i], one), (perm[j], -q)), 1))
            factors.append((_lin(0, (i, one), (j, -q)), -1))
    for i in range(N):
        d = x[i] - y[perm[i]]
        k = perm[i]
        factors.append((_lin(one, (k, -nu)), d - 1 - t))
        factors.append((_lin(one, (k, -one)), -(d + 1)))
    for k in range(N):
        factors.append((_lin(one, (k, -mu)), t))
    return Expression.product(_sign(perm) * one, factors)


def contour_residue_sum(expr: Expression, nvars: int):
    """Oriented iterated residue sum: (-1)^n times the counterclockwise residues."""
    return (-1) ** nvars * integrate_all(expr, nvars)


def _total(x, y, t, params):
    N = len(x)
    total = 0
    for perm in itertools.permutations(range(N)):
        total += contour_residue_sum(integrand(perm, x, y, t, params), N)
    return total


def cluster_sizes(y) -> list:
    return [len(list(g)) for _, g in groupby(sorted(y))]


def completeness_rhs(x, y, params: ModelParams):
    if tuple(sorted(x)) != tuple(sorted(y)):
        return 0 * params.q
    q, nu = params.q, params.nu
    out = (1 - q) ** (-len(y))
    for n in cluster_sizes(y):
        out *= q_pochhammer(q, q, n) / q_pochhammer(nu, q, n)
    return out


def completeness_check(x, y, params: ModelParams, tol: float = 1e-10) -> dict:
    x, y = tuple(x), tuple(y)
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")
    _check_domain(params, len(x))
    lhs = _total(x, y, 0, params)
    rhs = completeness_rhs(x, y, params)
    err = abs(lhs - rhs)
    ok = err == 0 if params.is_exact else err < tol
    return {"lhs": lhs, "rhs": rhs, "abs_error": err, "pass": bool(ok)}


def green_prefactor(x, params: ModelParams):
    """(1-q)^N prod_clusters (nu;q)_n/(q;q)_n over the clusters of ``x``."""
    q, nu = params.q, params.nu
    out = (1 - q) ** len(x)
    for n in cluster_sizes(x):
        out *= q_pochhammer(nu, q, n) / q_pochhammer(q, q, n)
    return out


def green_function(t: int, x, y, params: ModelParams):
    """Probability of moving from ``y`` to ``x`` in ``t`` parallel steps on Z."""
    x, y = tuple(sorted(x)), tuple(sorted(y))
    if len(x) != len(y):
        raise ValueError("x and y must have the same length")
    if t < 0:
        raise ValueError("t must be nonnegative")
    _check_domain(params, len(x))
    # the stationary weight enters through the right eigenvector, so the
    # cluster factor belongs to the final configuration x
    return green_prefactor(x, params) * _total(x, y, t, params)


def reachable(y, t: int) -> list:
    """Weakly increasing x with y_i <= x_i and x_N <= y_N + t."""
    y = tuple(sorted(y))
    N = len(y)
    hi = y[-1] + t
    out = []

    def rec(i, lo, acc):
        if i == N:
            out.append(tuple(acc))
            return
        for v in range(max(lo, y[i]), min(hi, y[i] + t) + 1):
            rec(i + 1, v, acc + [v])

    rec(0, y[0], [])
    return out


def green_table(t: int, y, params: ModelParams) -> dict:
    return {x: green_function(t, x, y, params) for x in reachable(y, t)}


def quadrature(x, y, t: int, params: ModelParams, radii=None, points: int = 96) -> complex:
    """Trapezoid rule on nested circles, an independent check on the residues.

    Includes the (-1)^N orientation and no prefactor, so it estimates the same
    quantity as the permutation sum in :func:`completeness_check` (t = 0).
    """
    q, mu, nu = (complex(v) for v in (params.q, params.mu, params.nu))
    N = len(x)
    radii = radii or [1.3 + 0.05 * i for i in range(N)]
    th = 2 * np.pi * np.arange(points) / points
    grids = np.meshgrid(*[r * np.exp(1j * th) for r in radii], indexing="ij")
    # du/(2 pi i) = u dtheta / (2 pi)
    weight = np.prod([g / points for g in grids], axis=0)
    total = np.zeros_like(grids[0])
    for perm in itertools.permutations(range(N)):
        term = np.full_like(grids[0], _sign(perm))
        for i in range(N):
            for j in range(i + 1, N):
                term *= (grids[perm[i]] - q * grids[perm[j]]) / (grids[i] - q * grids[j])
        for i in range(N):
            d = x[i] - y[perm[i]]
            u = grids[perm[i]]
            term *= (1 - nu * u) ** (d - 1) / (1 - u) ** (d + 1)
        total += term
    for u in grids:
        total *= ((1 - mu * u) / (1 - nu * u)) ** t
    return (-1) ** N * complex(np.sum(total * weight))


def green_csv(t: int, y, table: dict, digits: int = 17) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    N = len(y)
    w.writerow(["t"] + [f"y{i + 1}" for i in range(N)] + [f"x{i + 1}" for i in range(N)] + ["value"])
    for x, v in table.items():
        w.writerow([t, *y, *x, format_scalar(v, digits)])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def completeness_json(x, y, params: ModelParams, report: dict) -> str:
    data = {
        "params": params.describe(),
        "N": len(x),
        "x": list(x),
        "y": list(y),
        "lhs": _jsonable(report["lhs"]),
        "rhs": _jsonable(report["rhs"]),
        "abs_error": float(report["abs_error"]),
        "pass": report["pass"],
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
