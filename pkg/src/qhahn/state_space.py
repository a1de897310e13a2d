"""Configurations and exact transition matrices.

Configurations are occupation tuples ``(n_0, ..., n_{L-1})``.  Matrices use
the column convention ``M[n, n']`` = probability of ``n' -> n``, so columns
sum to one and ``P_{t+1} = M P_t``.

The same code builds exact (Fraction) and floating matrices; the scalar type
follows the parameters.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .hopping import ModelParams, phi, site_weight

__all__ = [
    "StateSpaceTooLarge",
    "WindowTooSmall",
    "max_states",
    "state_count",
    "enumerate_configs",
    "occupation_to_coords",
    "coords_to_occupation",
    "TransitionMatrix",
    "build_markov_matrix",
    "stationary_vector",
    "conjugate_m0",
    "parity_map",
    "parity",
    "rotation_map",
    "check_conjugation",
    "check_translation",
    "build_window_matrix",
    "propagate",
]

DEFAULT_MAX_STATES = 20000


class StateSpaceTooLarge(RuntimeError):
    pass


class WindowTooSmall(ValueError):
    pass


def max_states() -> int:
    """Cap on the state-space dimension; override with QHAHN_MAX_STATES."""
    return int(os.environ.get("QHAHN_MAX_STATES", DEFAULT_MAX_STATES))


def state_count(L: int, N: int) -> int:
    return comb(L + N - 1, N)


def _compositions(L: int, N: int):
    if L == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in _compositions(L - 1, N - first):
            yield (first,) + rest


def enumerate_configs(L: int, N: int, cap: int | None = None) -> list:
    """All occupation vectors of N particles on L sites, in descending lex order."""
    if L < 1 or N < 0:
        raise ValueError("need L >= 1 and N >= 0")
    cap = max_states() if cap is None else cap
    if state_count(L, N) > cap:
        raise StateSpaceTooLarge(f"dimension {state_count(L, N)} exceeds cap {cap}")
    return list(_compositions(L, N))


def occupation_to_coords(occ, offset: int = 0) -> tuple:
    return tuple(offset + i for i, n in enumerate(occ) for _ in range(n))


def coords_to_occupation(coords, size: int, offset: int = 0) -> tuple:
    occ = [0] * size
    for x in coords:
        if not 0 <= x - offset < size:
            raise ValueError(f"coordinate {x} outside [{offset}, {offset + size})")
        occ[x - offset] += 1
    return tuple(occ)


@dataclass
class TransitionMatrix:
    """Sparse column-stochastic matrix over enumerated configurations."""

    configs: list
    entries: dict  # (row, col) -> scalar
    # (row, col) -> number of distinct flow vectors that contributed
    multiplicity: dict = field(default_factory=dict)
    ring: bool = True

    def __post_init__(self):
        self.index = {c: i for i, c in enumerate(self.configs)}

    @property
    def dim(self) -> int:
        return len(self.configs)

    def __getitem__(self, key):
        r, c = key
        return self.entries.get((r, c), 0)

    def column_sums(self) -> list:
        sums = [0] * self.dim
        for (_, c), v in self.entries.items():
            sums[c] += v
        return sums

    def matvec(self, vec) -> list:
        out = [0 * vec[0] if len(vec) else 0] * self.dim
        for (r, c), v in self.entries.items():
            out[r] += v * vec[c]
        return out

    def to_dense(self):
        """Nested lists of Fractions for exact matrices, else a numpy array."""
        exact = all(isinstance(v, (int, Fraction)) for v in self.entries.values())
        if exact:
            dense = [[Fraction(0)] * self.dim for _ in range(self.dim)]
            for (r, c), v in self.entries.items():
                dense[r][c] = v
            return dense
        return self.to_float_array()

    def to_float_array(self) -> np.ndarray:
        dense = np.zeros((self.dim, self.dim), dtype=complex if self._is_complex() else float)
        for (r, c), v in self.entries.items():
            dense[r, c] = complex(v) if self._is_complex() else float(v)
        return dense

    def _is_complex(self) -> bool:
        return any(isinstance(v, complex) for v in self.entries.values())

    def flow_diagnostic(self) -> dict:
        multi = {k: m for k, m in self.multiplicity.items() if m > 1}
        return {"entries": len(self.entries), "multi_flow_entries": len(multi),
                "max_multiplicity": max(self.multiplicity.values(), default=0)}

    def coordinate_list(self, exact_fractions: bool = True) -> str:
        from .hopping import format_scalar

        lines = []
        for (r, c) in sorted(self.entries):
            v = self.entries[(r, c)]
            text = str(v) if exact_fractions and isinstance(v, (int, Fraction)) else format_scalar(v)
            lines.append(f"{r} {c} {text}")
        return "\n".join(lines) + "\n"

    def legend(self) -> str:
        return "".join(f"{i} {' '.join(map(str, c))}\n" for i, c in enumerate(self.configs))


def _phi_rows(params: ModelParams, n_max: int) -> list:
    return [[phi(m, n, params) for m in range(n + 1)] for n in range(n_max + 1)]


def build_markov_matrix(L: int, N: int, params: ModelParams, cap: int | None = None) -> TransitionMatrix:
    """Ring transition matrix, summing over every feasible flow vector.

    Each source column is expanded over all outflows ``m_i <= n'_i``; flows
    that differ by a uniform shift around the ring land on the same target and
    are added, with their count kept in ``multiplicity``.
    """
    configs = enumerate_configs(L, N, cap)
    index = {c: i for i, c in enumerate(configs)}
    table = _phi_rows(params, N)
    entries: dict = {}
    mult: dict = {}
    for col, src in enumerate(configs):
        for flows in itertools.product(*(range(n + 1) for n in src)):
            w = table[src[0]][flows[0]]
            for i in range(1, L):
                w = w * table[src[i]][flows[i]]
            if w == 0:
                continue
            tgt = tuple(src[i] - flows[i] + flows[i - 1] for i in range(L))
            key = (index[tgt], col)
            entries[key] = entries.get(key, 0) + w
            mult[key] = mult.get(key, 0) + 1
    return TransitionMatrix(configs, entries, mult, ring=True)


def stationary_vector(L: int, N: int, params: ModelParams, configs=None) -> list:
    """Normalized product measure prod_i f(n_i) on the fixed-N sector."""
    configs = configs if configs is not None else enumerate_configs(L, N)
    raw = []
    for c in configs:
        w = 1
        for n in c:
            w = w * site_weight(n, params)
        raw.append(w)
    total = sum(raw)
    if total == 0:
        raise ZeroDivisionError("stationary weights sum to zero")
    return [w / total for w in raw]


def conjugate_m0(M: TransitionMatrix, p_st) -> TransitionMatrix:
    """S M S^-1 with S = diag(1/P_st)."""
    if any(w == 0 for w in p_st):
        raise ZeroDivisionError("zero stationary weight; conjugation undefined")
    entries = {(r, c): v * p_st[c] / p_st[r] for (r, c), v in M.entries.items()}
    return TransitionMatrix(M.configs, entries, dict(M.multiplicity), ring=M.ring)


def parity_map(configs) -> list:
    """Index permutation induced by the site reflection i -> -i (mod L)."""
    index = {c: i for i, c in enumerate(configs)}
    out = []
    for c in configs:
        L = len(c)
        out.append(index[tuple(c[(-i) % L] for i in range(L))])
    return out


def rotation_map(configs) -> list:
    index = {c: i for i, c in enumerate(configs)}
    return [index[tuple(c[i - 1] for i in range(len(c)))] for c in configs]


def parity(M: TransitionMatrix) -> TransitionMatrix:
    """Pi M Pi."""
    pi = parity_map(M.configs)
    entries = {(pi[r], pi[c]): v for (r, c), v in M.entries.items()}
    return TransitionMatrix(M.configs, entries, {}, ring=M.ring)


def check_conjugation(M: TransitionMatrix, p_st, tol=0) -> bool:
    """Entrywise M^T = Pi S M S^-1 Pi."""
    rhs = parity(conjugate_m0(M, p_st))
    keys = set(rhs.entries) | {(c, r) for (r, c) in M.entries}
    for (r, c) in keys:
        if abs(M[c, r] - rhs[r, c]) > tol:
            return False
    return True


def check_translation(M: TransitionMatrix, tol=0) -> bool:
    rot = rotation_map(M.configs)
    keys = set(M.entries) | {(rot[r], rot[c]) for (r, c) in M.entries}
    inv = {j: i for i, j in enumerate(rot)}
    for (r, c) in keys:
        if abs(M[r, c] - M[inv[r], inv[c]]) > tol:
            return False
    return True


def build_window_matrix(window, N: int, params: ModelParams, cap: int | None = None) -> TransitionMatrix:
    """Open-chain transition matrix on sites ``window[0]..window[1]``.

    Particles on the last site are frozen, so the right edge is absorbing;
    the result is exact for as long as nothing reaches that edge.
    """
    a, b = window
    size = b - a + 1
    if size < 1:
        raise ValueError("empty window")
    configs = enumerate_configs(size, N, cap)
    index = {c: i for i, c in enumerate(configs)}
    table = _phi_rows(params, N)
    entries: dict = {}
    for col, src in enumerate(configs):
        ranges = [range(n + 1) for n in src[:-1]] + [range(1)]
        for flows in itertools.product(*ranges):
            w = 1
            for i in range(size - 1):
                w = w * table[src[i]][flows[i]]
            if w == 0:
                continue
            tgt = tuple(src[i] - flows[i] + (flows[i - 1] if i else 0) for i in range(size))
            key = (index[tgt], col)
            entries[key] = entries.get(key, 0) + w
    return TransitionMatrix(configs, entries, {}, ring=False)


def propagate(y, t: int, params: ModelParams, window=None) -> dict:
    """Distribution of coordinates after t steps from ``y``, via the window matrix.

    Returns ``{coords: probability}`` over configurations with nonzero mass.
    """
    y = tuple(sorted(y))
    lo, hi = (y[0], y[-1] + t) if window is None else window
    if y[0] < lo or y[-1] + t > hi:
        raise WindowTooSmall(f"window [{lo}, {hi}] cannot hold {t} steps from {y}")
    M = build_window_matrix((lo, hi), len(y), params)
    start = coords_to_occupation(y, hi - lo + 1, lo)
    zero = 0 * params.q
    vec = [zero] * M.dim
    vec[M.index[start]] = 1 + zero
    for _ in range(t):
        vec = M.matvec(vec)
    return {occupation_to_coords(c, lo): v for c, v in zip(M.configs, vec) if v != 0}
